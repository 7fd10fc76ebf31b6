// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "tensor/tape.hpp"

namespace cgnmt {

/// Named-tensor container used for checkpoints.
///
/// Layout, all integers little-endian:
///   "CGNMT1" | u32 record count |
///   per record: u32 name length | UTF-8 name | u32 rank | u64 dims[rank] | float32 data
using NamedTensors = std::vector<std::pair<std::string, Tensor<float>>>;

std::string encode_archive(const NamedTensors& tensors);
NamedTensors decode_archive(const std::string& bytes);

void write_archive(const std::filesystem::path& path, const NamedTensors& tensors);
NamedTensors read_archive(const std::filesystem::path& path);

/// Parameters are stored as float32 regardless of the working precision.
template <typename Real>
NamedTensors to_archive(const ParameterSet<Real>& params);
/// Loads values by name; every parameter must be present with the same shape.
template <typename Real>
void from_archive(const NamedTensors& tensors, ParameterSet<Real>& params);

}  // namespace cgnmt
