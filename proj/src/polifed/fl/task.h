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

#ifndef POLIFED_FL_TASK_H_
#define POLIFED_FL_TASK_H_

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "polifed/fl/model_params.h"

namespace polifed::fl {

// Dense design matrix (row-major) with integer class labels.
struct Examples {
  std::size_t dim = 0;
  std::vector<double> features;
  std::vector<int> labels;

  std::size_t size() const { return labels.size(); }
  std::span<const double> row(std::size_t i) const {
    return {features.data() + i * dim, dim};
  }
};

// A subset of rows of an Examples table.
struct Batch {
  const Examples* examples = nullptr;
  std::span<const std::size_t> rows;

  std::size_t size() const { return rows.size(); }
};

// All rows of `ex`, in order. `storage` must outlive the batch.
Batch WholeBatch(const Examples& ex, std::vector<std::size_t>& storage);

// A model with a closed-form gradient. Loss is the mean over the batch.
class DifferentiableTask {
 public:
  virtual ~DifferentiableTask() = default;

  virtual std::string name() const = 0;
  virtual std::size_t input_dim() const = 0;
  virtual int num_classes() const = 0;

  virtual ModelParams Init(std::uint64_t seed) const = 0;
  virtual double Loss(const ModelParams& params, const Batch& batch) const = 0;
  virtual ModelParams Gradient(const ModelParams& params,
                               const Batch& batch) const = 0;
  // Per-row class probabilities, rows x num_classes.
  virtual std::vector<double> Predict(const ModelParams& params,
                                      const Examples& ex) const = 0;
};

// Binary logistic regression: p(y=1|x) = sigmoid(w.x + b).
class LogisticRegression : public DifferentiableTask {
 public:
  explicit LogisticRegression(std::size_t dim) : dim_(dim) {}
  std::string name() const override { return "logistic"; }
  std::size_t input_dim() const override { return dim_; }
  int num_classes() const override { return 2; }
  ModelParams Init(std::uint64_t seed) const override;
  double Loss(const ModelParams& params, const Batch& batch) const override;
  ModelParams Gradient(const ModelParams& params, const Batch& batch) const override;
  std::vector<double> Predict(const ModelParams& params, const Examples& ex) const override;

 private:
  std::size_t dim_;
};

// Multinomial logistic regression with cross-entropy loss.
class SoftmaxRegression : public DifferentiableTask {
 public:
  SoftmaxRegression(std::size_t dim, int classes) : dim_(dim), classes_(classes) {}
  std::string name() const override { return "softmax"; }
  std::size_t input_dim() const override { return dim_; }
  int num_classes() const override { return classes_; }
  ModelParams Init(std::uint64_t seed) const override;
  double Loss(const ModelParams& params, const Batch& batch) const override;
  ModelParams Gradient(const ModelParams& params, const Batch& batch) const override;
  std::vector<double> Predict(const ModelParams& params, const Examples& ex) const override;

 private:
  std::size_t dim_;
  int classes_;
};

// One tanh hidden layer followed by a softmax output layer.
class Perceptron : public DifferentiableTask {
 public:
  Perceptron(std::size_t dim, std::size_t hidden, int classes)
      : dim_(dim), hidden_(hidden), classes_(classes) {}
  std::string name() const override { return "mlp"; }
  std::size_t input_dim() const override { return dim_; }
  int num_classes() const override { return classes_; }
  ModelParams Init(std::uint64_t seed) const override;
  double Loss(const ModelParams& params, const Batch& batch) const override;
  ModelParams Gradient(const ModelParams& params, const Batch& batch) const override;
  std::vector<double> Predict(const ModelParams& params, const Examples& ex) const override;

 private:
  std::size_t dim_;
  std::size_t hidden_;
  int classes_;
};

// Builds a task by name: "logistic", "softmax", or "mlp".
std::unique_ptr<DifferentiableTask> MakeTask(const std::string& model,
                                             std::size_t dim, int classes,
                                             std::size_t hidden = 16);

double Accuracy(const DifferentiableTask& task, const ModelParams& params,
                const Examples& ex);
// ROC AUC of the class-1 probability; binary labels only.
double RocAuc(std::span<const double> scores, std::span<const int> labels);
double RocAuc(const DifferentiableTask& task, const ModelParams& params,
              const Examples& ex);

}  // namespace polifed::fl

#endif  // POLIFED_FL_TASK_H_
