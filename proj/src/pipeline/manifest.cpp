// SPDX-License-Identifier: Apache-2.0
#include "pipeline/manifest.hpp"

#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>

#include "subword/text.hpp"
#include "tensor/errors.hpp"
#include "training/digest.hpp"

namespace cgnmt::pipeline {

namespace {

std::string quote_arg(const std::string& a) {
  if (!a.empty() && a.find_first_of(" \t\n'\"\\") == std::string::npos) return a;
  std::string out = "'";
  for (char c : a) out += c == '\'' ? std::string("'\\''") : std::string(1, c);
  return out + "'";
}

}  // namespace

void Manifest::add_input(const std::filesystem::path& p) { inputs.emplace_back(p.string(), sha256_file(p.string())); }
void Manifest::add_output(const std::filesystem::path& p) { outputs.emplace_back(p.string(), sha256_file(p.string())); }

std::string Manifest::to_text() const {
  std::string out = "[run]\ncommand = " + command + "\nargv =";
  for (const auto& a : argv) out += " " + quote_arg(a);
  char secs[64];
  std::snprintf(secs, sizeof secs, "%.3f", wall_clock_seconds);
  out += "\nseed = " + std::to_string(seed) + "\nstarted = " + started + "\nwall_clock_seconds = " + secs + "\n[config]\n";
  for (const auto& [k, v] : config) out += k + " = " + v + "\n";
  out += "[inputs]\n";
  for (const auto& [p, d] : inputs) out += d + "  " + p + "\n";
  out += "[outputs]\n";
  for (const auto& [p, d] : outputs) out += d + "  " + p + "\n";
  return out;
}

void append_manifest(const std::filesystem::path& path, const Manifest& manifest) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::app);
  if (!out) fail(ErrorCode::Io, "cannot open " + path.string());
  out << manifest.to_text() << "\n";
  if (!out) fail(ErrorCode::Io, "write error on " + path.string());
}

std::vector<Manifest> read_manifests(const std::filesystem::path& path) {
  std::vector<Manifest> out;
  std::string section;
  for (const auto& line : subword::read_lines(path.string())) {
    if (line.empty()) continue;
    if (line.front() == '[') {
      section = line;
      if (section == "[run]") out.emplace_back();
      continue;
    }
    if (out.empty()) fail(ErrorCode::Format, path.string() + ": content before the first [run]");
    auto& m = out.back();
    if (section == "[inputs]" || section == "[outputs]") {
      const auto sep = line.find("  ");
      if (sep == std::string::npos) fail(ErrorCode::Format, path.string() + ": malformed digest line");
      (section == "[inputs]" ? m.inputs : m.outputs).emplace_back(line.substr(sep + 2), line.substr(0, sep));
      continue;
    }
    const auto eq = line.find(" =");
    if (eq == std::string::npos) fail(ErrorCode::Format, path.string() + ": malformed line \"" + line + "\"");
    const std::string key = line.substr(0, eq);
    const std::string value = line.size() > eq + 3 ? line.substr(eq + 3) : "";
    if (section == "[config]") {
      m.config[key] = value;
    } else if (key == "command") {
      m.command = value;
    } else if (key == "argv") {
      m.argv = subword::split_ws(value);
    } else if (key == "seed") {
      m.seed = std::stoull(value);
    } else if (key == "started") {
      m.started = value;
    } else if (key == "wall_clock_seconds") {
      m.wall_clock_seconds = std::stod(value);
    }
  }
  return out;
}

std::string utc_now() {
  const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace cgnmt::pipeline
