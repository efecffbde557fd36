#pragma once

#include <span>
#include <vector>

#include "avec/tensor.hpp"

namespace avec {

struct AdamConfig {
    double stepsize = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

/// First/second moment accumulators, one pair per parameter tensor.
/// Step count increases by exactly 1 per adam_step call.
struct AdamState {
    AdamConfig cfg;
    std::vector<Tensor> m, v;
    long step = 0;

    static AdamState init(const std::vector<const Tensor*>& params, AdamConfig cfg);
};

/// Standard bias-corrected Adam update in place.
void adam_step(const std::vector<Tensor*>& params,
               const std::vector<const Tensor*>& grads, AdamState& state);

/// Flat-vector convenience used where parameters live in one array.
void adam_step_flat(std::span<double> params, std::span<const double> grads,
                    AdamState& state);

/// Rescales grads so their global L2 norm is at most max_norm.
/// Returns the pre-clip norm. max_norm <= 0 disables clipping.
double clip_global_norm(const std::vector<Tensor*>& grads, double max_norm);

}  // namespace avec
