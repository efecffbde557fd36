#include "avec/metrics.hpp"

#include <cstdio>
#include <sstream>
#include <stdexcept>

namespace avec {

namespace {

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string cell(const std::optional<double>& v) { return v ? fmt(*v) : ""; }

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

}  // namespace

const std::vector<std::string>& MetricsWriter::columns() {
    static const std::vector<std::string> cols = {
        "wall_step",   "update",       "ep_count",    "ep_ret_mean",  "ep_ret_min",
        "ep_ret_max",  "ep_len_mean",  "actor_loss",  "critic_loss",  "value_loss",
        "q1_loss",     "q2_loss",      "clip_frac",   "approx_kl",    "entropy",
        "actor_grad_norm", "correction", "crit_bias2", "crit_var",    "bias_ident_dev",
        "act_clip_frac", "diag_emp_dist", "diag_true_dist", "diag_bias2", "diag_var",
        "diag_cosine"};
    return cols;
}

MetricsWriter::MetricsWriter(const std::string& dir)
    : metrics_(dir + "/metrics.csv"), episodes_(dir + "/episodes.csv") {
    if (!metrics_ || !episodes_)
        throw std::runtime_error("MetricsWriter: cannot open log files in " + dir);
    metrics_ << "# avec-metrics-v1\n";
    std::string header;
    for (const std::string& c : columns()) {
        if (!header.empty()) header += ",";
        header += c;
    }
    metrics_ << header << "\n";
    metrics_.flush();
    episodes_ << "# avec-episodes-v1\n";
    episodes_ << "wall_step,episode,ret,len\n";
    episodes_.flush();
}

void MetricsWriter::row(const MetricsRow& r) {
    std::ostringstream os;
    os << r.wall_step << "," << r.update << "," << cell(r.ep_count) << ","
       << cell(r.ep_ret_mean) << "," << cell(r.ep_ret_min) << "," << cell(r.ep_ret_max)
       << "," << cell(r.ep_len_mean) << "," << cell(r.actor_loss) << ","
       << cell(r.critic_loss) << "," << cell(r.value_loss) << "," << cell(r.q1_loss)
       << "," << cell(r.q2_loss) << "," << cell(r.clip_frac) << "," << cell(r.approx_kl)
       << "," << cell(r.entropy) << "," << cell(r.actor_grad_norm) << ","
       << cell(r.correction) << "," << cell(r.crit_bias2) << "," << cell(r.crit_var)
       << "," << cell(r.bias_ident_dev) << "," << cell(r.act_clip_frac) << ","
       << cell(r.diag_emp_dist) << "," << cell(r.diag_true_dist) << ","
       << cell(r.diag_bias2) << "," << cell(r.diag_var) << "," << cell(r.diag_cosine);
    metrics_ << os.str() << "\n";
    metrics_.flush();
}

void MetricsWriter::episode(long wall_step, long index, double ret, std::size_t len) {
    episodes_ << wall_step << "," << index << "," << fmt(ret) << "," << len << "\n";
    episodes_.flush();
}

MetricsTable read_metrics(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("read_metrics: cannot open " + path);
    MetricsTable table;
    std::string line;
    bool have_header = false;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        auto cells = split_csv(line);
        if (!have_header) {
            table.columns = cells;
            have_header = true;
            continue;
        }
        if (cells.size() != table.columns.size()) {
            table.truncated_tail = true;  // crash-truncated final line
            continue;
        }
        std::map<std::string, double> row;
        bool bad = false;
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (cells[i].empty()) continue;
            try {
                std::size_t pos = 0;
                double v = std::stod(cells[i], &pos);
                if (pos != cells[i].size()) throw std::invalid_argument("trailing");
                row[table.columns[i]] = v;
            } catch (...) {
                bad = true;
                break;
            }
        }
        if (bad) {
            table.truncated_tail = true;
            continue;
        }
        table.rows.push_back(std::move(row));
    }
    return table;
}

std::vector<EpisodeRow> read_episodes(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("read_episodes: cannot open " + path);
    std::vector<EpisodeRow> rows;
    std::string line;
    bool have_header = false;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        if (!have_header) {
            have_header = true;  // column names line
            continue;
        }
        auto cells = split_csv(line);
        if (cells.size() != 4) continue;  // tolerate a truncated tail
        try {
            EpisodeRow r;
            r.wall_step = std::stol(cells[0]);
            r.index = std::stol(cells[1]);
            r.ret = std::stod(cells[2]);
            r.len = static_cast<std::size_t>(std::stol(cells[3]));
            rows.push_back(r);
        } catch (...) {
            continue;
        }
    }
    return rows;
}

}  // namespace avec
