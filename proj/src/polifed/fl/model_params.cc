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

#include "polifed/fl/model_params.h"

#include <bit>
#include <cmath>
#include <set>

#include "polifed/common/error.h"

namespace polifed::fl {
namespace {

std::size_t ShapeSize(const std::vector<std::size_t>& shape) {
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  return n;
}

void RequireConformable(const ModelParams& a, const ModelParams& b) {
  if (!a.ConformableWith(b)) {
    Fail(ErrorCode::kShapeMismatch, "model parameters are not conformable");
  }
}

}  // namespace

ModelParams::ModelParams(std::vector<ParamEntry> entries)
    : entries_(std::move(entries)) {
  std::set<std::string> names;
  std::size_t total = 0;
  for (const auto& e : entries_) {
    if (e.name.empty() || !names.insert(e.name).second) {
      Fail(ErrorCode::kInvalidArgument, "parameter names must be unique and non-empty");
    }
    if (e.values.size() != ShapeSize(e.shape)) {
      Fail(ErrorCode::kInvalidArgument, "values of '" + e.name + "' do not match its shape");
    }
    total += e.values.size();
  }
  if (total == 0) Fail(ErrorCode::kInvalidArgument, "model has no parameters");
  if (!AllFinite()) Fail(ErrorCode::kInvalidArgument, "model has non-finite values");
}

const ParamEntry& ModelParams::entry(const std::string& name) const {
  for (const auto& e : entries_) {
    if (e.name == name) return e;
  }
  Fail(ErrorCode::kInvalidArgument, "no parameter named " + name);
}

ParamEntry& ModelParams::entry(const std::string& name) {
  return const_cast<ParamEntry&>(std::as_const(*this).entry(name));
}

std::size_t ModelParams::num_values() const {
  std::size_t n = 0;
  for (const auto& e : entries_) n += e.values.size();
  return n;
}

bool ModelParams::ConformableWith(const ModelParams& other) const {
  if (entries_.size() != other.entries_.size()) return false;
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    if (entries_[i].name != other.entries_[i].name ||
        entries_[i].shape != other.entries_[i].shape) {
      return false;
    }
  }
  return true;
}

ModelParams ModelParams::ZerosLike() const {
  ModelParams out = *this;
  for (auto& e : out.entries_) std::fill(e.values.begin(), e.values.end(), 0.0);
  return out;
}

std::vector<double> ModelParams::Flatten() const {
  std::vector<double> flat;
  flat.reserve(num_values());
  for (const auto& e : entries_) flat.insert(flat.end(), e.values.begin(), e.values.end());
  return flat;
}

void ModelParams::Assign(std::span<const double> flat) {
  if (flat.size() != num_values()) {
    Fail(ErrorCode::kShapeMismatch, "flat vector has the wrong length");
  }
  std::size_t k = 0;
  for (auto& e : entries_) {
    for (double& v : e.values) v = flat[k++];
  }
}

bool ModelParams::AllFinite() const {
  for (const auto& e : entries_) {
    for (double v : e.values) {
      if (!std::isfinite(v)) return false;
    }
  }
  return true;
}

double ModelParams::L2Norm() const {
  double sum = 0;
  for (const auto& e : entries_) {
    for (double v : e.values) sum += v * v;
  }
  return std::sqrt(sum);
}

void Axpy(double scale, const ModelParams& other, ModelParams& target) {
  RequireConformable(target, other);
  auto& dst = target.mutable_entries();
  for (std::size_t i = 0; i < dst.size(); ++i) {
    const auto& src = other.entries()[i].values;
    for (std::size_t j = 0; j < src.size(); ++j) dst[i].values[j] += scale * src[j];
  }
}

ModelParams Subtract(const ModelParams& a, const ModelParams& b) {
  RequireConformable(a, b);
  ModelParams out = a;
  auto& dst = out.mutable_entries();
  for (std::size_t i = 0; i < dst.size(); ++i) {
    const auto& src = b.entries()[i].values;
    for (std::size_t j = 0; j < src.size(); ++j) dst[i].values[j] -= src[j];
  }
  return out;
}

void Scale(double factor, ModelParams& target) {
  for (auto& e : target.mutable_entries()) {
    for (double& v : e.values) v *= factor;
  }
}

// ---------------------------------------------------------------------------
// Binary codec.

namespace {

void PutU32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void PutU64(std::vector<std::uint8_t>& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  std::uint64_t Read(int width) {
    if (bytes_.size() - pos_ < static_cast<std::size_t>(width)) {
      Fail(ErrorCode::kProtocol, "truncated model encoding");
    }
    std::uint64_t v = 0;
    for (int i = 0; i < width; ++i) {
      v |= static_cast<std::uint64_t>(bytes_[pos_++]) << (8 * i);
    }
    return v;
  }

  std::string ReadString(std::size_t n) {
    if (bytes_.size() - pos_ < n) Fail(ErrorCode::kProtocol, "truncated model encoding");
    std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), n);
    pos_ += n;
    return s;
  }

  std::size_t remaining() const { return bytes_.size() - pos_; }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::vector<std::uint8_t> EncodeModelParams(const ModelParams& params) {
  std::vector<std::uint8_t> out;
  out.reserve(16 + params.num_values() * 8);
  PutU32(out, kModelParamsVersion);
  PutU32(out, static_cast<std::uint32_t>(params.entries().size()));
  for (const auto& e : params.entries()) {
    PutU32(out, static_cast<std::uint32_t>(e.name.size()));
    out.insert(out.end(), e.name.begin(), e.name.end());
    PutU32(out, static_cast<std::uint32_t>(e.shape.size()));
    for (std::size_t d : e.shape) PutU64(out, d);
    for (double v : e.values) PutU64(out, std::bit_cast<std::uint64_t>(v));
  }
  return out;
}

ModelParams DecodeModelParams(std::span<const std::uint8_t> bytes) {
  Reader r(bytes);
  if (r.Read(4) != kModelParamsVersion) {
    Fail(ErrorCode::kProtocol, "unsupported model encoding version");
  }
  std::uint64_t count = r.Read(4);
  std::vector<ParamEntry> entries;
  for (std::uint64_t i = 0; i < count; ++i) {
    ParamEntry e;
    e.name = r.ReadString(r.Read(4));
    std::uint64_t rank = r.Read(4);
    std::uint64_t n = 1;
    for (std::uint64_t k = 0; k < rank; ++k) {
      std::uint64_t d = r.Read(8);
      e.shape.push_back(d);
      if (d != 0 && n > r.remaining() / d) Fail(ErrorCode::kProtocol, "model shape too large");
      n *= d;
    }
    if (n > r.remaining() / 8) Fail(ErrorCode::kProtocol, "truncated model encoding");
    e.values.reserve(n);
    for (std::uint64_t k = 0; k < n; ++k) {
      e.values.push_back(std::bit_cast<double>(r.Read(8)));
    }
    entries.push_back(std::move(e));
  }
  if (r.remaining() != 0) Fail(ErrorCode::kProtocol, "trailing bytes after model encoding");
  try {
    return ModelParams(std::move(entries));
  } catch (const Error& e) {
    Fail(ErrorCode::kProtocol, std::string("invalid model encoding: ") + e.what());
  }
}

}  // namespace polifed::fl
