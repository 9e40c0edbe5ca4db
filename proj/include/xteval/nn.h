// Copyright 2026 The XTEval Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Minimal reverse-mode differentiation over dense row-major matrices, plus
// the AdamW optimizer and the warmup + polynomial-decay schedule shared by
// prompt training and finetuning.

#ifndef XTEVAL_NN_H_
#define XTEVAL_NN_H_

#include <functional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "xteval/common.h"

namespace xteval::nn {

using Matrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct Parameter {
  Parameter() = default;
  Parameter(std::string name, Matrix value);

  void ZeroGrad() { grad.setZero(value.rows(), value.cols()); }
  std::size_t size() const { return static_cast<std::size_t>(value.size()); }

  std::string name;
  Matrix value;
  Matrix grad;
};

// Normal(0, stddev) initialized matrix.
Matrix RandomNormal(Eigen::Index rows, Eigen::Index cols, double stddev,
                    Rng& rng);

// Handle to a node on a Tape.
struct Var {
  int index = -1;
};

// Records operations in evaluation order. Backward() walks the record in
// reverse; gradients of Leaf nodes are added to their Parameter::grad.
// A tape is single-use: build, read values, call Backward at most once.
class Tape {
 public:
  Var Constant(Matrix value);
  // Refers to `value` without copying; it must outlive the tape. No
  // gradient is exported.
  Var ConstantRef(const Matrix& value);
  Var Leaf(Parameter* param);

  Var MatMul(Var a, Var b);
  // a * b^T
  Var MatMulTransposed(Var a, Var b);
  Var Add(Var a, Var b);
  // Adds a 1 x cols row to every row of x.
  Var AddRowBroadcast(Var x, Var row);
  Var Scale(Var x, double factor);
  Var Relu(Var x);
  Var LayerNorm(Var x, Var gain, Var bias, double eps = 1e-5);
  // Row-wise softmax. With `causal`, row i only attends to columns <= i.
  Var SoftmaxRows(Var x, bool causal);
  Var GatherRows(Var table, std::vector<int> rows);
  Var ConcatRows(std::span<const Var> parts);

  const Matrix& value(Var v) const { return V(v.index); }
  // Only meaningful after Backward().
  const Matrix& grad(Var v) const { return nodes_.at(v.index).grad; }
  std::size_t size() const { return nodes_.size(); }

  void Backward(Var output, const Matrix& output_grad);

 private:
  struct Node {
    Matrix value;
    const Matrix* ref = nullptr;
    Matrix grad;
    Parameter* param = nullptr;
    std::function<void(Tape&, int)> backward;
  };

  Var Push(Matrix value, std::function<void(Tape&, int)> backward);
  Matrix& G(int index) { return nodes_[index].grad; }
  const Matrix& V(int index) const {
    const Node& n = nodes_[index];
    return n.ref != nullptr ? *n.ref : n.value;
  }

  std::vector<Node> nodes_;
  bool backward_done_ = false;
};

struct CrossEntropyResult {
  double loss = 0.0;
  std::vector<double> grad;  // d loss / d logits
};

// -log softmax(logits)[target], computed with a max shift.
CrossEntropyResult SoftmaxCrossEntropy(std::span<const double> logits,
                                       int target);

struct AdamWOptions {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double weight_decay = 0.0;
};

// Decoupled weight decay Adam. Step() consumes and zeroes the gradients.
class AdamW {
 public:
  AdamW(std::vector<Parameter*> params, AdamWOptions options);

  void Step(double learning_rate);
  void ZeroGrad();
  long steps() const { return steps_; }

 private:
  std::vector<Parameter*> params_;
  AdamWOptions options_;
  std::vector<Matrix> first_moment_;
  std::vector<Matrix> second_moment_;
  long steps_ = 0;
};

// Linear warmup to `peak` over `warmup_steps`, then polynomial decay to
// `end` at `total_steps`.
class PolynomialDecaySchedule {
 public:
  PolynomialDecaySchedule(double peak, long total_steps, long warmup_steps,
                          double end = 0.0, double power = 1.0);

  double LearningRate(long step) const;
  long total_steps() const { return total_steps_; }
  long warmup_steps() const { return warmup_steps_; }

 private:
  double peak_;
  long total_steps_;
  long warmup_steps_;
  double end_;
  double power_;
};

// Warmup step count for a fractional warmup, at least one step when the
// fraction is positive.
long WarmupSteps(long total_steps, double warmup_fraction);

}  // namespace xteval::nn

#endif  // XTEVAL_NN_H_
