#pragma once

#include <string>
#include <utility>
#include <vector>

#include "das/mlp.hpp"
#include "das/tensor.hpp"

namespace das {

// Matrix archive ("DASM"): magic, u32 format version, u32 tensor count, then
// per tensor u32 name length + UTF-8 name, u32 rank, u64 extents, row-major
// float64 little-endian payload. Round-trips bit-exactly.
inline constexpr std::uint32_t kArchiveVersion = 1;

using NamedTensors = std::vector<std::pair<std::string, Tensor>>;

void write_archive(const std::string& path, const NamedTensors& tensors);
NamedTensors read_archive(const std::string& path);

const Tensor* find_tensor(const NamedTensors& tensors, const std::string& name);

// Net checkpoints are archives with conventional names (embeddings, layerK.W,
// layerK.b, head.W, head.b) plus a meta tensor carrying the flags.
void save_net(const std::string& path, const FeedForwardNet& net);
FeedForwardNet load_net(const std::string& path);

}  // namespace das
