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

#ifndef MLSTM_CHECKPOINT_HPP
#define MLSTM_CHECKPOINT_HPP

#include <cstdint>
#include <istream>
#include <optional>
#include <ostream>
#include <string>

#include "mlstm/model.hpp"
#include "mlstm/training.hpp"

namespace mlstm {

// Binary layout, all integers and reals little-endian:
//
//   "MLSTM1"                      6-byte magic
//   u32 version                   kCheckpointVersion
//   u32 M, u32 K, u32 h
//   u32 input_dim[M]
//   u64 oov_seed                  seed of the out-of-vocabulary word vectors
//   u8  has_optimizer
//   f64 tensors...                row-major, in tensor_refs() order
//   [f64 rho, f64 eps, f64 E[g^2] tensors..., f64 E[dx^2] tensors...]
//
// Nothing may follow the last tensor.

inline constexpr char kCheckpointMagic[] = "MLSTM1";
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  ModelParams params;
  std::optional<AdadeltaState> optimizer;
  std::uint64_t oov_seed = 0;
};

void save_checkpoint(std::ostream& out, const Checkpoint& ckpt);
void save_checkpoint(const std::string& path, const Checkpoint& ckpt);

/// Throws FormatError on a bad magic, unknown version, inconsistent header,
/// truncated payload or trailing bytes.
Checkpoint load_checkpoint(std::istream& in);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace mlstm

#endif  // MLSTM_CHECKPOINT_HPP
