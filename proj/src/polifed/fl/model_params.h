// Copyright 2026 The PoliFed Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef POLIFED_FL_MODEL_PARAMS_H_
#define POLIFED_FL_MODEL_PARAMS_H_

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace polifed::fl {

struct ParamEntry {
  std::string name;
  std::vector<std::size_t> shape;
  std::vector<double> values;

  bool operator==(const ParamEntry&) const = default;
};

// Named, shaped float64 tensors. Also used for updates (L - G) and running
// sums, which share the model's layout.
class ModelParams {
 public:
  ModelParams() = default;
  explicit ModelParams(std::vector<ParamEntry> entries);

  const std::vector<ParamEntry>& entries() const { return entries_; }
  std::vector<ParamEntry>& mutable_entries() { return entries_; }
  const ParamEntry& entry(const std::string& name) const;
  ParamEntry& entry(const std::string& name);

  std::size_t num_values() const;

  // Same names, order and shapes.
  bool ConformableWith(const ModelParams& other) const;
  // Copy with the same layout and every value zero.
  ModelParams ZerosLike() const;

  // Flat iteration over all values in entry order.
  std::vector<double> Flatten() const;
  void Assign(std::span<const double> flat);

  bool AllFinite() const;
  double L2Norm() const;

  bool operator==(const ModelParams&) const = default;

 private:
  std::vector<ParamEntry> entries_;
};

// this += scale * other. Throws ShapeMismatch unless conformable.
void Axpy(double scale, const ModelParams& other, ModelParams& target);
// a - b
ModelParams Subtract(const ModelParams& a, const ModelParams& b);
void Scale(double factor, ModelParams& target);

// Binary layout, all integers little-endian:
//   u32 version (=1) | u32 entry_count |
//   per entry: u32 name_len | name bytes | u32 rank | u64 dims[rank] |
//              f64 values[prod(dims)]
std::vector<std::uint8_t> EncodeModelParams(const ModelParams& params);
ModelParams DecodeModelParams(std::span<const std::uint8_t> bytes);

inline constexpr std::uint32_t kModelParamsVersion = 1;

}  // namespace polifed::fl

#endif  // POLIFED_FL_MODEL_PARAMS_H_
