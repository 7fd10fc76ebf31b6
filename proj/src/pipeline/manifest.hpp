// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

namespace cgnmt::pipeline {

/// Record of one command invocation: enough to re-run it and check its outputs.
struct Manifest {
  std::string command;
  std::vector<std::string> argv;
  std::map<std::string, std::string> config;
  std::vector<std::pair<std::string, std::string>> inputs;   // path, sha256
  std::vector<std::pair<std::string, std::string>> outputs;  // path, sha256
  std::uint64_t seed = 0;
  std::string started;  // UTC, ISO 8601
  double wall_clock_seconds = 0;

  void add_input(const std::filesystem::path& p);
  void add_output(const std::filesystem::path& p);
  std::string to_text() const;
};

/// Appends the record, so a run directory accumulates one record per command.
void append_manifest(const std::filesystem::path& path, const Manifest& manifest);
/// Records of a manifest file in order.
std::vector<Manifest> read_manifests(const std::filesystem::path& path);

std::string utc_now();

}  // namespace cgnmt::pipeline
