// Copyright 2026 The Waveflow Authors.
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

// Masked autoregressive network (MADE). Outputs for dimension i depend only on
// inputs 0..i-1. Parameters live in one flat vector, ordered W1, b1, ..., W_out, b_out
// with every weight matrix stored row-major, masked entries included.

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <type_traits>
#include <vector>

#include <Eigen/Core>

#include "waveflow/autodiff.hpp"

namespace waveflow {

/// One group of per-dimension outputs, e.g. the raw weights of one bijection layer.
struct Head {
  std::string name;
  int width = 0;
  /// Output bias at initialization; empty means zeros.
  std::vector<double> init;
};

struct DenseLayer {
  int in = 0;
  int out = 0;
  std::size_t w_offset = 0;
  std::size_t b_offset = 0;
  bool activate = true;
  /// Row-major out x in binary mask.
  std::vector<std::uint8_t> mask;
  /// Connected inputs of every output unit.
  std::vector<std::vector<int>> inputs;
};

class MaskedNet {
 public:
  MaskedNet() = default;

  int n_dims() const noexcept { return n_dims_; }
  int hidden_width() const noexcept { return hidden_width_; }
  int n_hidden_layers() const noexcept { return static_cast<int>(layers_.size()) - 1; }
  const std::vector<Head>& heads() const noexcept { return heads_; }
  const std::vector<DenseLayer>& layers() const noexcept { return layers_; }
  /// Outputs per dimension (sum of head widths).
  int outputs_per_dim() const noexcept { return per_dim_; }
  int n_outputs() const noexcept { return per_dim_ * n_dims_; }
  std::size_t n_params() const noexcept { return n_params_; }

  /// Position of entry j of `head` for dimension `dim` in the output vector.
  int output_index(int dim, int head, int j) const noexcept {
    return dim * per_dim_ + head_offset_[static_cast<std::size_t>(head)] + j;
  }
  /// Degree of output unit o in the autoregressive ordering (dimension index).
  int output_dim(int o) const noexcept { return o / per_dim_; }

  /// Product of the binary masks: entry (o, j) counts paths from input j to output o.
  Eigen::MatrixXd connectivity() const;

  friend MaskedNet build_masked_net(int n_dims, int hidden_width, int n_hidden_layers,
                                    std::vector<Head> heads, std::uint64_t seed,
                                    std::vector<double>* params);

 private:
  int n_dims_ = 0;
  int hidden_width_ = 0;
  int per_dim_ = 0;
  std::size_t n_params_ = 0;
  std::vector<Head> heads_;
  std::vector<int> head_offset_;
  std::vector<DenseLayer> layers_;
};

/// Builds the masks and writes freshly initialized parameters into `params`:
/// hidden weights uniform in +-1/sqrt(fan_in), output weights zero, output biases from the heads.
MaskedNet build_masked_net(int n_dims, int hidden_width, int n_hidden_layers, std::vector<Head> heads,
                           std::uint64_t seed, std::vector<double>* params);

/// Raw outputs for input x. P is the parameter scalar, R the result scalar
/// (R must be able to absorb P, e.g. P = Var requires R in {Var, Taylor2<Var>}).
template <class P, class R>
std::vector<R> forward(const MaskedNet& net, std::span<const P> params, std::span<const R> x) {
  static_assert(!(std::is_same_v<P, ad::Var> && std::is_same_v<R, double>),
                "Var parameters need a Var-based result scalar");
  thread_local std::vector<P> wbuf;
  thread_local std::vector<R> hbuf;
  std::vector<R> act(x.begin(), x.end());
  std::vector<R> next;
  for (const DenseLayer& layer : net.layers()) {
    next.assign(static_cast<std::size_t>(layer.out), R(0.0));
    for (int o = 0; o < layer.out; ++o) {
      const auto& idx = layer.inputs[static_cast<std::size_t>(o)];
      wbuf.clear();
      hbuf.clear();
      const std::size_t row = layer.w_offset + static_cast<std::size_t>(o) * static_cast<std::size_t>(layer.in);
      for (int j : idx) {
        wbuf.push_back(params[row + static_cast<std::size_t>(j)]);
        hbuf.push_back(act[static_cast<std::size_t>(j)]);
      }
      const P& bias = params[layer.b_offset + static_cast<std::size_t>(o)];
      R pre = ad::affine(bias, std::span<const P>(wbuf), std::span<const R>(hbuf));
      if (layer.activate) {
        using std::tanh;
        pre = tanh(pre);
      }
      next[static_cast<std::size_t>(o)] = std::move(pre);
    }
    act.swap(next);
  }
  return act;
}

}  // namespace waveflow
