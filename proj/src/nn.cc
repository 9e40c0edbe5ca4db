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

#include "xteval/nn.h"

#include <algorithm>
#include <cmath>
#include <limits>

namespace xteval::nn {

Parameter::Parameter(std::string name, Matrix value)
    : name(std::move(name)), value(std::move(value)) {
  ZeroGrad();
}

Matrix RandomNormal(Eigen::Index rows, Eigen::Index cols, double stddev,
                    Rng& rng) {
  std::normal_distribution<double> dist(0.0, stddev);
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = dist(rng);
  return m;
}

Var Tape::Push(Matrix value, std::function<void(Tape&, int)> backward) {
  Node node;
  node.value = std::move(value);
  node.backward = std::move(backward);
  nodes_.push_back(std::move(node));
  return Var{static_cast<int>(nodes_.size()) - 1};
}

Var Tape::Constant(Matrix value) { return Push(std::move(value), nullptr); }

Var Tape::ConstantRef(const Matrix& value) {
  Var v = Push(Matrix(), nullptr);
  nodes_[v.index].ref = &value;
  return v;
}

Var Tape::Leaf(Parameter* param) {
  Var v = Push(Matrix(), nullptr);
  nodes_[v.index].ref = &param->value;
  nodes_[v.index].param = param;
  return v;
}

Var Tape::MatMul(Var a, Var b) {
  const int ia = a.index, ib = b.index;
  if (V(ia).cols() != V(ib).rows()) throw Error("MatMul: shape mismatch");
  return Push(V(ia) * V(ib), [ia, ib](Tape& t, int self) {
    t.G(ia).noalias() += t.G(self) * t.V(ib).transpose();
    t.G(ib).noalias() += t.V(ia).transpose() * t.G(self);
  });
}

Var Tape::MatMulTransposed(Var a, Var b) {
  const int ia = a.index, ib = b.index;
  if (V(ia).cols() != V(ib).cols()) {
    throw Error("MatMulTransposed: shape mismatch");
  }
  return Push(V(ia) * V(ib).transpose(), [ia, ib](Tape& t, int self) {
    t.G(ia).noalias() += t.G(self) * t.V(ib);
    t.G(ib).noalias() += t.G(self).transpose() * t.V(ia);
  });
}

Var Tape::Add(Var a, Var b) {
  const int ia = a.index, ib = b.index;
  if (V(ia).rows() != V(ib).rows() || V(ia).cols() != V(ib).cols()) {
    throw Error("Add: shape mismatch");
  }
  return Push(V(ia) + V(ib), [ia, ib](Tape& t, int self) {
    t.G(ia) += t.G(self);
    t.G(ib) += t.G(self);
  });
}

Var Tape::AddRowBroadcast(Var x, Var row) {
  const int ix = x.index, ir = row.index;
  if (V(ir).rows() != 1 || V(ir).cols() != V(ix).cols()) {
    throw Error("AddRowBroadcast: shape mismatch");
  }
  Matrix out = V(ix);
  out.rowwise() += V(ir).row(0);
  return Push(std::move(out), [ix, ir](Tape& t, int self) {
    t.G(ix) += t.G(self);
    t.G(ir) += t.G(self).colwise().sum();
  });
}

Var Tape::Scale(Var x, double factor) {
  const int ix = x.index;
  return Push(V(ix) * factor, [ix, factor](Tape& t, int self) {
    t.G(ix) += t.G(self) * factor;
  });
}

Var Tape::Relu(Var x) {
  const int ix = x.index;
  return Push(V(ix).cwiseMax(0.0), [ix](Tape& t, int self) {
    t.G(ix).array() +=
        t.G(self).array() * (t.V(ix).array() > 0.0).cast<double>();
  });
}

Var Tape::LayerNorm(Var x, Var gain, Var bias, double eps) {
  const int ix = x.index, ig = gain.index, ib = bias.index;
  const Matrix& in = V(ix);
  const Eigen::Index n = in.cols();
  Matrix normalized(in.rows(), n);
  Eigen::VectorXd inv_std(in.rows());
  for (Eigen::Index r = 0; r < in.rows(); ++r) {
    const double mean = in.row(r).mean();
    const double var = (in.row(r).array() - mean).square().mean();
    inv_std(r) = 1.0 / std::sqrt(var + eps);
    normalized.row(r) = (in.row(r).array() - mean) * inv_std(r);
  }
  Matrix out = normalized.array().rowwise() * V(ig).row(0).array();
  out.rowwise() += V(ib).row(0);
  return Push(std::move(out), [ix, ig, ib, normalized, inv_std, n](Tape& t,
                                                                    int self) {
    const Matrix& dy = t.G(self);
    t.G(ig) += (dy.array() * normalized.array()).colwise().sum().matrix();
    t.G(ib) += dy.colwise().sum();
    Matrix dxhat = dy.array().rowwise() * t.V(ig).row(0).array();
    for (Eigen::Index r = 0; r < dy.rows(); ++r) {
      const double sum_d = dxhat.row(r).sum();
      const double sum_dx = dxhat.row(r).dot(normalized.row(r));
      t.G(ix).row(r).array() +=
          inv_std(r) / static_cast<double>(n) *
          (static_cast<double>(n) * dxhat.row(r).array() - sum_d -
           normalized.row(r).array() * sum_dx);
    }
  });
}

Var Tape::SoftmaxRows(Var x, bool causal) {
  const int ix = x.index;
  const Matrix& in = V(ix);
  Matrix out = Matrix::Zero(in.rows(), in.cols());
  for (Eigen::Index r = 0; r < in.rows(); ++r) {
    const Eigen::Index width =
        causal ? std::min<Eigen::Index>(r + 1, in.cols()) : in.cols();
    const double shift = in.row(r).head(width).maxCoeff();
    double total = 0.0;
    for (Eigen::Index c = 0; c < width; ++c) {
      out(r, c) = std::exp(in(r, c) - shift);
      total += out(r, c);
    }
    out.row(r).head(width) /= total;
  }
  return Push(std::move(out), [ix](Tape& t, int self) {
    const Matrix& y = t.V(self);
    const Matrix& dy = t.G(self);
    for (Eigen::Index r = 0; r < y.rows(); ++r) {
      const double dot = y.row(r).dot(dy.row(r));
      t.G(ix).row(r).array() += y.row(r).array() * (dy.row(r).array() - dot);
    }
  });
}

Var Tape::GatherRows(Var table, std::vector<int> rows) {
  const int it = table.index;
  const Matrix& src = V(it);
  Matrix out(static_cast<Eigen::Index>(rows.size()), src.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] < 0 || rows[i] >= src.rows()) {
      throw Error("GatherRows: row index out of range");
    }
    out.row(static_cast<Eigen::Index>(i)) = src.row(rows[i]);
  }
  return Push(std::move(out), [it, rows = std::move(rows)](Tape& t, int self) {
    for (std::size_t i = 0; i < rows.size(); ++i) {
      t.G(it).row(rows[i]) += t.G(self).row(static_cast<Eigen::Index>(i));
    }
  });
}

Var Tape::ConcatRows(std::span<const Var> parts) {
  if (parts.empty()) throw Error("ConcatRows: no inputs");
  const Eigen::Index cols = V(parts.front().index).cols();
  Eigen::Index total = 0;
  std::vector<int> indices;
  for (Var p : parts) {
    if (V(p.index).cols() != cols) throw Error("ConcatRows: width mismatch");
    total += V(p.index).rows();
    indices.push_back(p.index);
  }
  Matrix out(total, cols);
  Eigen::Index offset = 0;
  for (int idx : indices) {
    out.middleRows(offset, V(idx).rows()) = V(idx);
    offset += V(idx).rows();
  }
  return Push(std::move(out), [indices](Tape& t, int self) {
    Eigen::Index off = 0;
    for (int idx : indices) {
      const Eigen::Index n = t.V(idx).rows();
      t.G(idx) += t.G(self).middleRows(off, n);
      off += n;
    }
  });
}

void Tape::Backward(Var output, const Matrix& output_grad) {
  if (backward_done_) throw Error("Tape::Backward called twice");
  backward_done_ = true;
  const int out = output.index;
  if (V(out).rows() != output_grad.rows() ||
      V(out).cols() != output_grad.cols()) {
    throw Error("Tape::Backward: seed gradient shape mismatch");
  }
  for (int i = 0; i <= out; ++i) {
    nodes_[i].grad.setZero(V(i).rows(), V(i).cols());
  }
  nodes_[out].grad = output_grad;
  for (int i = out; i >= 0; --i) {
    if (nodes_[i].backward) nodes_[i].backward(*this, i);
  }
  for (int i = 0; i <= out; ++i) {
    if (nodes_[i].param != nullptr) nodes_[i].param->grad += nodes_[i].grad;
  }
}

CrossEntropyResult SoftmaxCrossEntropy(std::span<const double> logits,
                                       int target) {
  if (target < 0 || static_cast<std::size_t>(target) >= logits.size()) {
    throw Error("SoftmaxCrossEntropy: target out of range");
  }
  const double shift = *std::max_element(logits.begin(), logits.end());
  double total = 0.0;
  CrossEntropyResult r;
  r.grad.resize(logits.size());
  for (std::size_t i = 0; i < logits.size(); ++i) {
    r.grad[i] = std::exp(logits[i] - shift);
    total += r.grad[i];
  }
  for (double& g : r.grad) g /= total;
  r.loss = -(logits[target] - shift - std::log(total));
  r.grad[target] -= 1.0;
  return r;
}

AdamW::AdamW(std::vector<Parameter*> params, AdamWOptions options)
    : params_(std::move(params)), options_(options) {
  for (Parameter* p : params_) {
    first_moment_.push_back(Matrix::Zero(p->value.rows(), p->value.cols()));
    second_moment_.push_back(Matrix::Zero(p->value.rows(), p->value.cols()));
  }
}

void AdamW::Step(double learning_rate) {
  ++steps_;
  const double bias1 = 1.0 - std::pow(options_.beta1, steps_);
  const double bias2 = 1.0 - std::pow(options_.beta2, steps_);
  for (std::size_t i = 0; i < params_.size(); ++i) {
    Parameter& p = *params_[i];
    if (options_.weight_decay != 0.0) {
      p.value *= 1.0 - learning_rate * options_.weight_decay;
    }
    first_moment_[i] =
        options_.beta1 * first_moment_[i] + (1.0 - options_.beta1) * p.grad;
    second_moment_[i] = options_.beta2 * second_moment_[i] +
                        (1.0 - options_.beta2) * p.grad.cwiseProduct(p.grad);
    p.value.array() -=
        learning_rate * (first_moment_[i].array() / bias1) /
        ((second_moment_[i].array() / bias2).sqrt() + options_.epsilon);
    p.ZeroGrad();
  }
}

void AdamW::ZeroGrad() {
  for (Parameter* p : params_) p->ZeroGrad();
}

PolynomialDecaySchedule::PolynomialDecaySchedule(double peak, long total_steps,
                                                 long warmup_steps, double end,
                                                 double power)
    : peak_(peak),
      total_steps_(std::max(1L, total_steps)),
      warmup_steps_(std::clamp(warmup_steps, 0L, std::max(1L, total_steps))),
      end_(end),
      power_(power) {}

double PolynomialDecaySchedule::LearningRate(long step) const {
  if (warmup_steps_ > 0 && step < warmup_steps_) {
    return peak_ * static_cast<double>(step + 1) /
           static_cast<double>(warmup_steps_);
  }
  if (step >= total_steps_) return end_;
  const double remaining =
      static_cast<double>(total_steps_ - step) /
      static_cast<double>(std::max(1L, total_steps_ - warmup_steps_));
  return (peak_ - end_) * std::pow(remaining, power_) + end_;
}

long WarmupSteps(long total_steps, double warmup_fraction) {
  if (warmup_fraction <= 0.0) return 0;
  return std::max(1L, static_cast<long>(std::lround(
                          warmup_fraction * static_cast<double>(total_steps))));
}

}  // namespace xteval::nn
