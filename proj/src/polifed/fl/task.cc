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

#include "polifed/fl/task.h"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "polifed/common/error.h"
#include "polifed/common/rng.h"

namespace polifed::fl {
namespace {

double Softplus(double z) {
  return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
}

double Sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  double e = std::exp(z);
  return e / (1.0 + e);
}

// In-place softmax of `logits`; returns log-sum-exp.
double SoftmaxInPlace(std::span<double> logits) {
  double m = *std::max_element(logits.begin(), logits.end());
  double sum = 0;
  for (double& v : logits) {
    v = std::exp(v - m);
    sum += v;
  }
  for (double& v : logits) v /= sum;
  return m + std::log(sum);
}

std::vector<double> RandomNormal(std::size_t n, double stddev, Rng& rng) {
  std::normal_distribution<double> dist(0.0, stddev);
  std::vector<double> out(n);
  for (double& v : out) v = dist(rng);
  return out;
}

void CheckBatch(const Batch& batch, std::size_t dim) {
  if (batch.examples == nullptr || batch.size() == 0) {
    Fail(ErrorCode::kInvalidArgument, "empty batch");
  }
  if (batch.examples->dim != dim) {
    Fail(ErrorCode::kShapeMismatch, "examples do not match the model input width");
  }
}

int Label(const Batch& b, std::size_t row, int classes) {
  int y = b.examples->labels[row];
  if (y < 0 || y >= classes) Fail(ErrorCode::kInvalidArgument, "label out of range");
  return y;
}

double Dot(std::span<const double> a, const double* b) {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

}  // namespace

Batch WholeBatch(const Examples& ex, std::vector<std::size_t>& storage) {
  storage.resize(ex.size());
  std::iota(storage.begin(), storage.end(), std::size_t{0});
  return Batch{&ex, storage};
}

// ---------------------------------------------------------------------------
// Logistic regression.

ModelParams LogisticRegression::Init(std::uint64_t seed) const {
  Rng rng(seed);
  return ModelParams({{"w", {dim_}, RandomNormal(dim_, 0.01, rng)},
                      {"b", {1}, {0.0}}});
}

double LogisticRegression::Loss(const ModelParams& params, const Batch& batch) const {
  CheckBatch(batch, dim_);
  const auto& w = params.entry("w").values;
  double b = params.entry("b").values[0];
  double total = 0;
  for (std::size_t r : batch.rows) {
    double z = Dot(batch.examples->row(r), w.data()) + b;
    total += Softplus(z) - Label(batch, r, 2) * z;
  }
  return total / batch.size();
}

ModelParams LogisticRegression::Gradient(const ModelParams& params,
                                         const Batch& batch) const {
  CheckBatch(batch, dim_);
  const auto& w = params.entry("w").values;
  double b = params.entry("b").values[0];
  ModelParams g = params.ZerosLike();
  auto& gw = g.entry("w").values;
  double& gb = g.entry("b").values[0];
  for (std::size_t r : batch.rows) {
    auto x = batch.examples->row(r);
    double err = Sigmoid(Dot(x, w.data()) + b) - Label(batch, r, 2);
    for (std::size_t j = 0; j < dim_; ++j) gw[j] += err * x[j];
    gb += err;
  }
  Scale(1.0 / batch.size(), g);
  return g;
}

std::vector<double> LogisticRegression::Predict(const ModelParams& params,
                                                const Examples& ex) const {
  const auto& w = params.entry("w").values;
  double b = params.entry("b").values[0];
  std::vector<double> out;
  out.reserve(ex.size() * 2);
  for (std::size_t r = 0; r < ex.size(); ++r) {
    double p = Sigmoid(Dot(ex.row(r), w.data()) + b);
    out.push_back(1 - p);
    out.push_back(p);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Softmax regression.

ModelParams SoftmaxRegression::Init(std::uint64_t seed) const {
  Rng rng(seed);
  std::size_t c = static_cast<std::size_t>(classes_);
  return ModelParams({{"W", {c, dim_}, RandomNormal(c * dim_, 0.01, rng)},
                      {"b", {c}, std::vector<double>(c, 0.0)}});
}

namespace {

void SoftmaxLogits(const std::vector<double>& W, const std::vector<double>& b,
                   std::span<const double> x, std::vector<double>& logits) {
  std::size_t dim = x.size();
  for (std::size_t k = 0; k < logits.size(); ++k) {
    logits[k] = b[k] + Dot(x, W.data() + k * dim);
  }
}

}  // namespace

double SoftmaxRegression::Loss(const ModelParams& params, const Batch& batch) const {
  CheckBatch(batch, dim_);
  const auto& W = params.entry("W").values;
  const auto& b = params.entry("b").values;
  std::vector<double> logits(classes_);
  double total = 0;
  for (std::size_t r : batch.rows) {
    SoftmaxLogits(W, b, batch.examples->row(r), logits);
    int y = Label(batch, r, classes_);
    double zy = logits[y];
    total += SoftmaxInPlace(logits) - zy;
  }
  return total / batch.size();
}

ModelParams SoftmaxRegression::Gradient(const ModelParams& params,
                                        const Batch& batch) const {
  CheckBatch(batch, dim_);
  const auto& W = params.entry("W").values;
  const auto& b = params.entry("b").values;
  ModelParams g = params.ZerosLike();
  auto& gW = g.entry("W").values;
  auto& gb = g.entry("b").values;
  std::vector<double> p(classes_);
  for (std::size_t r : batch.rows) {
    auto x = batch.examples->row(r);
    SoftmaxLogits(W, b, x, p);
    SoftmaxInPlace(p);
    p[Label(batch, r, classes_)] -= 1.0;
    for (int k = 0; k < classes_; ++k) {
      double* gk = gW.data() + k * dim_;
      for (std::size_t j = 0; j < dim_; ++j) gk[j] += p[k] * x[j];
      gb[k] += p[k];
    }
  }
  Scale(1.0 / batch.size(), g);
  return g;
}

std::vector<double> SoftmaxRegression::Predict(const ModelParams& params,
                                               const Examples& ex) const {
  const auto& W = params.entry("W").values;
  const auto& b = params.entry("b").values;
  std::vector<double> out(ex.size() * classes_);
  std::vector<double> p(classes_);
  for (std::size_t r = 0; r < ex.size(); ++r) {
    SoftmaxLogits(W, b, ex.row(r), p);
    SoftmaxInPlace(p);
    std::copy(p.begin(), p.end(), out.begin() + r * classes_);
  }
  return out;
}

// ---------------------------------------------------------------------------
// One-hidden-layer perceptron.

ModelParams Perceptron::Init(std::uint64_t seed) const {
  Rng rng(seed);
  std::size_t c = static_cast<std::size_t>(classes_);
  return ModelParams(
      {{"W1", {hidden_, dim_}, RandomNormal(hidden_ * dim_, 1.0 / std::sqrt(dim_), rng)},
       {"b1", {hidden_}, std::vector<double>(hidden_, 0.0)},
       {"W2", {c, hidden_}, RandomNormal(c * hidden_, 1.0 / std::sqrt(hidden_), rng)},
       {"b2", {c}, std::vector<double>(c, 0.0)}});
}

namespace {

struct Forward {
  std::vector<double> hidden;
  std::vector<double> probs;
  double log_norm = 0;
  double logit_y = 0;
};

void RunForward(const ModelParams& params, std::span<const double> x, int y,
                std::size_t hidden, int classes, Forward& f) {
  const auto& W1 = params.entry("W1").values;
  const auto& b1 = params.entry("b1").values;
  const auto& W2 = params.entry("W2").values;
  const auto& b2 = params.entry("b2").values;
  f.hidden.resize(hidden);
  f.probs.resize(classes);
  for (std::size_t h = 0; h < hidden; ++h) {
    f.hidden[h] = std::tanh(b1[h] + Dot(x, W1.data() + h * x.size()));
  }
  for (int k = 0; k < classes; ++k) {
    f.probs[k] = b2[k] + Dot(f.hidden, W2.data() + k * hidden);
  }
  f.logit_y = y >= 0 ? f.probs[y] : 0.0;
  f.log_norm = SoftmaxInPlace(f.probs);
}

}  // namespace

double Perceptron::Loss(const ModelParams& params, const Batch& batch) const {
  CheckBatch(batch, dim_);
  Forward f;
  double total = 0;
  for (std::size_t r : batch.rows) {
    RunForward(params, batch.examples->row(r), Label(batch, r, classes_), hidden_,
               classes_, f);
    total += f.log_norm - f.logit_y;
  }
  return total / batch.size();
}

ModelParams Perceptron::Gradient(const ModelParams& params, const Batch& batch) const {
  CheckBatch(batch, dim_);
  const auto& W2 = params.entry("W2").values;
  ModelParams g = params.ZerosLike();
  auto& gW1 = g.entry("W1").values;
  auto& gb1 = g.entry("b1").values;
  auto& gW2 = g.entry("W2").values;
  auto& gb2 = g.entry("b2").values;
  Forward f;
  std::vector<double> dpre(hidden_);
  for (std::size_t r : batch.rows) {
    auto x = batch.examples->row(r);
    int y = Label(batch, r, classes_);
    RunForward(params, x, y, hidden_, classes_, f);
    f.probs[y] -= 1.0;
    std::fill(dpre.begin(), dpre.end(), 0.0);
    for (int k = 0; k < classes_; ++k) {
      double dk = f.probs[k];
      gb2[k] += dk;
      for (std::size_t h = 0; h < hidden_; ++h) {
        gW2[k * hidden_ + h] += dk * f.hidden[h];
        dpre[h] += dk * W2[k * hidden_ + h];
      }
    }
    for (std::size_t h = 0; h < hidden_; ++h) {
      double d = dpre[h] * (1 - f.hidden[h] * f.hidden[h]);
      gb1[h] += d;
      for (std::size_t j = 0; j < dim_; ++j) gW1[h * dim_ + j] += d * x[j];
    }
  }
  Scale(1.0 / batch.size(), g);
  return g;
}

std::vector<double> Perceptron::Predict(const ModelParams& params,
                                        const Examples& ex) const {
  std::vector<double> out(ex.size() * classes_);
  Forward f;
  for (std::size_t r = 0; r < ex.size(); ++r) {
    RunForward(params, ex.row(r), -1, hidden_, classes_, f);
    std::copy(f.probs.begin(), f.probs.end(), out.begin() + r * classes_);
  }
  return out;
}

// ---------------------------------------------------------------------------

std::unique_ptr<DifferentiableTask> MakeTask(const std::string& model,
                                             std::size_t dim, int classes,
                                             std::size_t hidden) {
  if (dim == 0) Fail(ErrorCode::kInvalidArgument, "model input width must be positive");
  if (model == "logistic") {
    if (classes != 2) Fail(ErrorCode::kInvalidArgument, "logistic model is binary");
    return std::make_unique<LogisticRegression>(dim);
  }
  if (classes < 2) Fail(ErrorCode::kInvalidArgument, "need at least two classes");
  if (model == "softmax") return std::make_unique<SoftmaxRegression>(dim, classes);
  if (model == "mlp") {
    if (hidden == 0) Fail(ErrorCode::kInvalidArgument, "hidden width must be positive");
    return std::make_unique<Perceptron>(dim, hidden, classes);
  }
  Fail(ErrorCode::kInvalidArgument, "unknown model '" + model + "'");
}

double Accuracy(const DifferentiableTask& task, const ModelParams& params,
                const Examples& ex) {
  if (ex.size() == 0) return 0.0;
  std::vector<double> probs = task.Predict(params, ex);
  int c = task.num_classes();
  std::size_t correct = 0;
  for (std::size_t r = 0; r < ex.size(); ++r) {
    auto begin = probs.begin() + r * c;
    int pred = static_cast<int>(std::max_element(begin, begin + c) - begin);
    correct += pred == ex.labels[r];
  }
  return static_cast<double>(correct) / ex.size();
}

double RocAuc(std::span<const double> scores, std::span<const int> labels) {
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  // Mann-Whitney U with midranks for ties.
  double rank_sum = 0;
  std::size_t positives = 0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) ++j;
    double midrank = (i + 1 + j) / 2.0;
    for (std::size_t k = i; k < j; ++k) {
      if (labels[order[k]] == 1) {
        rank_sum += midrank;
        ++positives;
      }
    }
    i = j;
  }
  std::size_t negatives = scores.size() - positives;
  if (positives == 0 || negatives == 0) return 0.5;
  double u = rank_sum - positives * (positives + 1) / 2.0;
  return u / (static_cast<double>(positives) * negatives);
}

double RocAuc(const DifferentiableTask& task, const ModelParams& params,
              const Examples& ex) {
  if (task.num_classes() != 2) Fail(ErrorCode::kInvalidArgument, "AUC needs a binary task");
  std::vector<double> probs = task.Predict(params, ex);
  std::vector<double> scores(ex.size());
  for (std::size_t r = 0; r < ex.size(); ++r) scores[r] = probs[2 * r + 1];
  return RocAuc(scores, ex.labels);
}

}  // namespace polifed::fl
