// Copyright 2026 The mlstm Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//    http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "mlstm/checkpoint.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>

namespace mlstm {

namespace {

constexpr std::size_t kMagicLen = sizeof(kCheckpointMagic) - 1;
constexpr std::uint32_t kMaxDim = 1u << 20;

class Writer {
 public:
  explicit Writer(std::ostream& out) : out_(out) {}

  void bytes(const void* p, std::size_t n) {
    out_.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
  }
  void u8(std::uint8_t v) { bytes(&v, 1); }
  void u32(std::uint32_t v) { le(v, 4); }
  void u64(std::uint64_t v) { le(v, 8); }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }

  void tensors(const ModelParams& p) {
    for (const auto& t : tensor_refs(p)) {
      for (Eigen::Index r = 0; r < t.rows; ++r)
        for (Eigen::Index c = 0; c < t.cols; ++c)
          f64(t.data[static_cast<std::size_t>(c * t.rows + r)]);
    }
  }

 private:
  void le(std::uint64_t v, int n) {
    std::array<unsigned char, 8> buf{};
    for (int i = 0; i < n; ++i) buf[i] = static_cast<unsigned char>(v >> (8 * i));
    bytes(buf.data(), static_cast<std::size_t>(n));
  }

  std::ostream& out_;
};

class Reader {
 public:
  explicit Reader(std::istream& in) : in_(in) {}

  void bytes(void* p, std::size_t n, const char* what) {
    in_.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in_.gcount()) != n) {
      throw FormatError(std::string("checkpoint truncated while reading ") + what);
    }
  }
  std::uint8_t u8(const char* what) {
    std::uint8_t v;
    bytes(&v, 1, what);
    return v;
  }
  std::uint32_t u32(const char* what) { return static_cast<std::uint32_t>(le(4, what)); }
  std::uint64_t u64(const char* what) { return le(8, what); }
  double f64(const char* what) { return std::bit_cast<double>(u64(what)); }

  void tensors(ModelParams& p) {
    for (auto& t : tensor_refs(p)) {
      for (Eigen::Index r = 0; r < t.rows; ++r)
        for (Eigen::Index c = 0; c < t.cols; ++c)
          t.data[static_cast<std::size_t>(c * t.rows + r)] = f64(t.name.c_str());
    }
  }

  bool at_end() { return in_.peek() == std::char_traits<char>::eof(); }

 private:
  std::uint64_t le(int n, const char* what) {
    std::array<unsigned char, 8> buf{};
    bytes(buf.data(), static_cast<std::size_t>(n), what);
    std::uint64_t v = 0;
    for (int i = 0; i < n; ++i) v |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
    return v;
  }

  std::istream& in_;
};

std::uint32_t checked_u32(Eigen::Index v) { return static_cast<std::uint32_t>(v); }

}  // namespace

void save_checkpoint(std::ostream& out, const Checkpoint& ckpt) {
  ckpt.params.validate();
  Writer w(out);
  w.bytes(kCheckpointMagic, kMagicLen);
  w.u32(kCheckpointVersion);
  w.u32(static_cast<std::uint32_t>(ckpt.params.num_aspects()));
  w.u32(checked_u32(ckpt.params.num_classes()));
  w.u32(checked_u32(ckpt.params.hidden_dim()));
  for (auto d : ckpt.params.input_dims()) w.u32(checked_u32(d));
  w.u64(ckpt.oov_seed);
  w.u8(ckpt.optimizer ? 1 : 0);
  w.tensors(ckpt.params);
  if (ckpt.optimizer) {
    if (!same_shapes(ckpt.params, ckpt.optimizer->sq_grad) ||
        !same_shapes(ckpt.params, ckpt.optimizer->sq_delta)) {
      throw DimensionError("save_checkpoint: optimizer state does not match parameters");
    }
    w.f64(ckpt.optimizer->rho);
    w.f64(ckpt.optimizer->eps);
    w.tensors(ckpt.optimizer->sq_grad);
    w.tensors(ckpt.optimizer->sq_delta);
  }
  if (!out) throw IoError("save_checkpoint: write failed");
}

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open checkpoint for writing: " + path);
  save_checkpoint(out, ckpt);
  out.close();
  if (!out) throw IoError("failed writing checkpoint: " + path);
}

Checkpoint load_checkpoint(std::istream& in) {
  Reader r(in);
  char magic[kMagicLen];
  r.bytes(magic, kMagicLen, "magic");
  if (std::memcmp(magic, kCheckpointMagic, kMagicLen) != 0) {
    throw FormatError("unsupported checkpoint version: bad magic header (expected MLSTM1)");
  }
  const std::uint32_t version = r.u32("version");
  if (version != kCheckpointVersion) {
    throw FormatError("unsupported checkpoint version " + std::to_string(version) +
                      " (this build reads version " + std::to_string(kCheckpointVersion) + ")");
  }
  const std::uint32_t M = r.u32("aspect count");
  const std::uint32_t K = r.u32("class count");
  const std::uint32_t h = r.u32("hidden dimension");
  if (M == 0 || M > 64 || K < 2 || K > kMaxDim || h == 0 || h > kMaxDim) {
    throw FormatError("checkpoint header has invalid dimensions");
  }
  std::vector<Eigen::Index> dims;
  for (std::uint32_t m = 0; m < M; ++m) {
    const std::uint32_t d = r.u32("input dimension");
    if (d == 0 || d > kMaxDim) throw FormatError("checkpoint header has invalid input dimension");
    dims.push_back(d);
  }
  Checkpoint ckpt;
  ckpt.oov_seed = r.u64("oov seed");
  const std::uint8_t has_opt = r.u8("optimizer flag");
  if (has_opt > 1) throw FormatError("checkpoint optimizer flag is corrupt");
  ckpt.params = ModelParams::zeros(dims, h, K);
  r.tensors(ckpt.params);
  if (has_opt) {
    AdadeltaState st = AdadeltaState::zeros_like(ckpt.params);
    st.rho = r.f64("rho");
    st.eps = r.f64("eps");
    r.tensors(st.sq_grad);
    r.tensors(st.sq_delta);
    ckpt.optimizer = std::move(st);
  }
  if (!r.at_end()) throw FormatError("checkpoint has trailing bytes");
  return ckpt;
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint: " + path);
  try {
    return load_checkpoint(in);
  } catch (const FormatError& e) {
    throw FormatError(path + ": " + e.what());
  }
}

}  // namespace mlstm
