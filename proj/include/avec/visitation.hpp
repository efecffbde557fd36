#pragma once

#include <span>
#include <vector>

namespace avec {

struct Histogram {
    std::vector<std::size_t> bins_per_dim;
    std::vector<double> lo, hi;
    std::vector<double> freq;  // flattened, row-major over dims; sums to 1
    std::size_t total = 0;     // number of states counted
};

/// Online state-visitation counter over a fixed binned box.
class VisitationAccum {
  public:
    VisitationAccum(std::vector<std::size_t> bins_per_dim, std::vector<double> lo,
                    std::vector<double> hi);
    void add(std::span<const double> state);
    Histogram normalized() const;  // throws if nothing was added
    std::size_t total() const { return total_; }

  private:
    std::vector<std::size_t> bins_;
    std::vector<double> lo_, hi_;
    std::vector<std::size_t> counts_;
    std::size_t total_ = 0;
};

/// Normalized histogram of every state visited across the trajectories.
Histogram state_visitation(const std::vector<std::vector<std::vector<double>>>& trajectories,
                           std::vector<std::size_t> bins_per_dim, std::vector<double> lo,
                           std::vector<double> hi);

}  // namespace avec
