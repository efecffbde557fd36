#pragma once

#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace avec {

/// One metrics row. Absent fields stay disengaged and serialize as blanks.
struct MetricsRow {
    long wall_step = 0;
    long update = 0;
    std::optional<double> ep_count, ep_ret_mean, ep_ret_min, ep_ret_max, ep_len_mean;
    std::optional<double> actor_loss, critic_loss, value_loss, q1_loss, q2_loss;
    std::optional<double> clip_frac, approx_kl, entropy, actor_grad_norm;
    std::optional<double> correction, crit_bias2, crit_var, bias_ident_dev, act_clip_frac;
    std::optional<double> diag_emp_dist, diag_true_dist, diag_bias2, diag_var,
        diag_cosine;
};

/// Append-only, line-buffered CSV writers. Schema is versioned in a leading
/// comment so a crash mid-update still leaves a parseable file.
class MetricsWriter {
  public:
    explicit MetricsWriter(const std::string& dir);
    void row(const MetricsRow& r);
    void episode(long wall_step, long index, double ret, std::size_t len);

    static const std::vector<std::string>& columns();

  private:
    std::ofstream metrics_, episodes_;
};

struct MetricsTable {
    std::vector<std::string> columns;
    std::vector<std::map<std::string, double>> rows;  // absent = missing
    bool truncated_tail = false;                      // malformed last line skipped
};

MetricsTable read_metrics(const std::string& path);

struct EpisodeRow {
    long wall_step = 0;
    long index = 0;
    double ret = 0.0;
    std::size_t len = 0;
};

std::vector<EpisodeRow> read_episodes(const std::string& path);

}  // namespace avec
