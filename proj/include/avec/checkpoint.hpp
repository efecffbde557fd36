#pragma once

#include <string>
#include <vector>

#include "avec/tensor.hpp"

namespace avec {

struct NamedTensor {
    std::string name;
    Tensor value;
};

/// Checkpoint file layout (JSON):
///   { "format": "avec-checkpoint-v1",
///     "step": <int>,
///     "params": [ { "name": "...", "shape": [..], "data": [..] }, ... ] }
/// data is row-major float64; shapes must multiply out to data length.
void save_checkpoint(const std::string& path, long step,
                     const std::vector<NamedTensor>& params);

std::vector<NamedTensor> load_checkpoint(const std::string& path, long* step = nullptr);

}  // namespace avec
