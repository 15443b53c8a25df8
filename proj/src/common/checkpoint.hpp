#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include <json.hpp>

namespace ranopt {

struct NamedTensor {
    std::string name;
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data; // row-major
};

/// Versioned flat container shared by the forecaster and the DQN agents:
///
///   RANOPT-CKPT 1\n
///   {json header: kind, meta, tensor shapes, blob_bytes}\n
///   <little-endian float64 blob, tensors in header order>
struct Checkpoint {
    std::string kind;
    nlohmann::json meta;
    std::vector<NamedTensor> tensors;

    const NamedTensor& tensor(const std::string& name) const;
};

void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& path, const std::string& expected_kind);

} // namespace ranopt
