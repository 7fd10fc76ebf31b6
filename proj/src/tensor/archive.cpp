// SPDX-License-Identifier: Apache-2.0
#include "tensor/archive.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

#include "tensor/errors.hpp"

namespace cgnmt {
namespace {

constexpr char kMagic[] = "CGNMT1";
constexpr std::size_t kMagicLen = 6;

template <typename U>
void put_le(std::string& out, U v) {
  for (std::size_t i = 0; i < sizeof(U); ++i) out.push_back(char((v >> (8 * i)) & 0xFF));
}

class Reader {
 public:
  explicit Reader(const std::string& bytes) : bytes_(bytes) {}

  template <typename U>
  U get() {
    need(sizeof(U));
    U v = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i) v |= U(std::uint8_t(bytes_[pos_ + i])) << (8 * i);
    pos_ += sizeof(U);
    return v;
  }

  std::string take(std::size_t n) {
    need(n);
    std::string s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }

  bool done() const { return pos_ == bytes_.size(); }

 private:
  void need(std::size_t n) const {
    if (pos_ + n > bytes_.size()) fail(ErrorCode::Format, "checkpoint archive is truncated");
  }

  const std::string& bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string encode_archive(const NamedTensors& tensors) {
  std::string out(kMagic, kMagicLen);
  put_le<std::uint32_t>(out, std::uint32_t(tensors.size()));
  for (const auto& [name, t] : tensors) {
    put_le<std::uint32_t>(out, std::uint32_t(name.size()));
    out += name;
    put_le<std::uint32_t>(out, std::uint32_t(t.rank()));
    for (auto d : t.shape()) put_le<std::uint64_t>(out, std::uint64_t(d));
    for (float v : t.values()) put_le<std::uint32_t>(out, std::bit_cast<std::uint32_t>(v));
  }
  return out;
}

NamedTensors decode_archive(const std::string& bytes) {
  Reader in(bytes);
  if (in.take(kMagicLen) != std::string(kMagic, kMagicLen)) fail(ErrorCode::Format, "not a CGNMT1 checkpoint archive");
  const auto count = in.get<std::uint32_t>();
  NamedTensors out;
  out.reserve(count);
  for (std::uint32_t r = 0; r < count; ++r) {
    const auto len = in.get<std::uint32_t>();
    std::string name = in.take(len);
    const auto rank = in.get<std::uint32_t>();
    Shape shape(rank);
    for (auto& d : shape) d = std::size_t(in.get<std::uint64_t>());
    std::vector<float> data(shape_size(shape));
    for (auto& v : data) v = std::bit_cast<float>(in.get<std::uint32_t>());
    out.emplace_back(std::move(name), Tensor<float>(std::move(shape), std::move(data)));
  }
  if (!in.done()) fail(ErrorCode::Format, "trailing bytes after checkpoint records");
  return out;
}

void write_archive(const std::filesystem::path& path, const NamedTensors& tensors) {
  const std::string bytes = encode_archive(tensors);
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) fail(ErrorCode::Io, "cannot write " + path.string());
  os.write(bytes.data(), std::streamsize(bytes.size()));
  if (!os) fail(ErrorCode::Io, "failed writing " + path.string());
}

NamedTensors read_archive(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) fail(ErrorCode::Io, "cannot read " + path.string());
  std::ostringstream ss;
  ss << is.rdbuf();
  return decode_archive(ss.str());
}

template <typename Real>
NamedTensors to_archive(const ParameterSet<Real>& params) {
  NamedTensors out;
  for (const auto& p : params) out.emplace_back(p->name, p->value.template cast<float>());
  return out;
}

template <typename Real>
void from_archive(const NamedTensors& tensors, ParameterSet<Real>& params) {
  std::map<std::string, const Tensor<float>*> by_name;
  for (const auto& [name, t] : tensors) by_name[name] = &t;
  for (auto& p : params) {
    auto it = by_name.find(p->name);
    if (it == by_name.end()) fail(ErrorCode::Format, "checkpoint lacks parameter '" + p->name + "'");
    if (it->second->shape() != p->value.shape())
      fail(ErrorCode::Dimension, "checkpoint parameter '" + p->name + "' has shape " + shape_string(it->second->shape()) +
                                     ", model expects " + shape_string(p->value.shape()));
    p->value = it->second->template cast<Real>();
  }
}

template NamedTensors to_archive(const ParameterSet<float>&);
template NamedTensors to_archive(const ParameterSet<double>&);
template void from_archive(const NamedTensors&, ParameterSet<float>&);
template void from_archive(const NamedTensors&, ParameterSet<double>&);

}  // namespace cgnmt
