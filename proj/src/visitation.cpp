#include "avec/visitation.hpp"

#include <stdexcept>

namespace avec {

VisitationAccum::VisitationAccum(std::vector<std::size_t> bins_per_dim,
                                 std::vector<double> lo, std::vector<double> hi)
    : bins_(std::move(bins_per_dim)), lo_(std::move(lo)), hi_(std::move(hi)) {
    if (bins_.empty() || bins_.size() != lo_.size() || bins_.size() != hi_.size())
        throw std::invalid_argument("VisitationAccum: inconsistent dimensions");
    std::size_t cells = 1;
    for (std::size_t i = 0; i < bins_.size(); ++i) {
        if (bins_[i] == 0) throw std::invalid_argument("VisitationAccum: zero bins");
        if (!(lo_[i] < hi_[i])) throw std::invalid_argument("VisitationAccum: lo >= hi");
        cells *= bins_[i];
    }
    counts_.assign(cells, 0);
}

void VisitationAccum::add(std::span<const double> state) {
    if (state.size() != bins_.size())
        throw std::invalid_argument("VisitationAccum: state dimension mismatch");
    std::size_t cell = 0;
    for (std::size_t d = 0; d < bins_.size(); ++d) {
        double frac = (state[d] - lo_[d]) / (hi_[d] - lo_[d]);
        auto idx = static_cast<long>(frac * static_cast<double>(bins_[d]));
        if (idx < 0) idx = 0;
        if (idx >= static_cast<long>(bins_[d])) idx = static_cast<long>(bins_[d]) - 1;
        cell = cell * bins_[d] + static_cast<std::size_t>(idx);
    }
    counts_[cell] += 1;
    total_ += 1;
}

Histogram VisitationAccum::normalized() const {
    if (total_ == 0)
        throw std::invalid_argument("state_visitation: empty trajectory set");
    Histogram h;
    h.bins_per_dim = bins_;
    h.lo = lo_;
    h.hi = hi_;
    h.total = total_;
    h.freq.resize(counts_.size());
    for (std::size_t i = 0; i < counts_.size(); ++i)
        h.freq[i] = static_cast<double>(counts_[i]) / static_cast<double>(total_);
    return h;
}

Histogram state_visitation(const std::vector<std::vector<std::vector<double>>>& trajectories,
                           std::vector<std::size_t> bins_per_dim, std::vector<double> lo,
                           std::vector<double> hi) {
    VisitationAccum acc(std::move(bins_per_dim), std::move(lo), std::move(hi));
    for (const auto& traj : trajectories)
        for (const auto& s : traj) acc.add(s);
    return acc.normalized();
}

}  // namespace avec
