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

#include "waveflow/conditioner.hpp"

#include <cmath>

#include "waveflow/errors.hpp"
#include "waveflow/rng.hpp"

namespace waveflow {

namespace {

DenseLayer make_layer(int in, int out, std::size_t& offset, bool activate,
                      const std::vector<int>& deg_in, const std::vector<int>& deg_out, bool strict) {
  DenseLayer layer;
  layer.in = in;
  layer.out = out;
  layer.activate = activate;
  layer.w_offset = offset;
  offset += static_cast<std::size_t>(in) * static_cast<std::size_t>(out);
  layer.b_offset = offset;
  offset += static_cast<std::size_t>(out);
  layer.mask.assign(static_cast<std::size_t>(in) * static_cast<std::size_t>(out), 0);
  layer.inputs.resize(static_cast<std::size_t>(out));
  for (int o = 0; o < out; ++o) {
    for (int j = 0; j < in; ++j) {
      const int a = deg_out[static_cast<std::size_t>(o)];
      const int b = deg_in[static_cast<std::size_t>(j)];
      if (strict ? a > b : a >= b) {
        layer.mask[static_cast<std::size_t>(o * in + j)] = 1;
        layer.inputs[static_cast<std::size_t>(o)].push_back(j);
      }
    }
  }
  return layer;
}

}  // namespace

MaskedNet build_masked_net(int n_dims, int hidden_width, int n_hidden_layers, std::vector<Head> heads,
                           std::uint64_t seed, std::vector<double>* params) {
  if (n_dims < 1 || hidden_width < 1 || n_hidden_layers < 1)
    throw InvalidConfiguration("network sizes must be positive");
  if (heads.empty()) throw InvalidConfiguration("at least one output head is required");
  MaskedNet net;
  net.n_dims_ = n_dims;
  net.hidden_width_ = hidden_width;
  for (const Head& h : heads) {
    if (h.width < 1) throw InvalidConfiguration("head '" + h.name + "' has non-positive width");
    if (!h.init.empty() && static_cast<int>(h.init.size()) != h.width)
      throw InvalidConfiguration("head '" + h.name + "' init size does not match its width");
    net.head_offset_.push_back(net.per_dim_);
    net.per_dim_ += h.width;
  }
  net.heads_ = std::move(heads);

  // Degrees: input j -> j + 1, hidden unit k -> (k mod (n-1)) + 1, outputs of dim i -> i + 1.
  std::vector<int> deg_in(static_cast<std::size_t>(n_dims));
  for (int j = 0; j < n_dims; ++j) deg_in[static_cast<std::size_t>(j)] = j + 1;
  std::vector<int> deg_hidden(static_cast<std::size_t>(hidden_width));
  for (int k = 0; k < hidden_width; ++k)
    deg_hidden[static_cast<std::size_t>(k)] = n_dims > 1 ? (k % (n_dims - 1)) + 1 : 1;
  std::vector<int> deg_out(static_cast<std::size_t>(net.n_outputs()));
  for (int o = 0; o < net.n_outputs(); ++o) deg_out[static_cast<std::size_t>(o)] = net.output_dim(o) + 1;

  std::size_t offset = 0;
  net.layers_.push_back(make_layer(n_dims, hidden_width, offset, true, deg_in, deg_hidden, false));
  for (int l = 1; l < n_hidden_layers; ++l)
    net.layers_.push_back(make_layer(hidden_width, hidden_width, offset, true, deg_hidden, deg_hidden, false));
  net.layers_.push_back(make_layer(hidden_width, net.n_outputs(), offset, false, deg_hidden, deg_out, true));
  net.n_params_ = offset;

  if (params != nullptr) {
    params->assign(offset, 0.0);
    Rng rng = derive_rng(seed, 0x6d616465ULL);
    for (std::size_t l = 0; l + 1 < net.layers_.size(); ++l) {
      const DenseLayer& layer = net.layers_[l];
      const double scale = 1.0 / std::sqrt(static_cast<double>(layer.in));
      for (int o = 0; o < layer.out; ++o) {
        for (int j = 0; j < layer.in; ++j) {
          const double w = scale * (2.0 * uniform01(rng) - 1.0);
          if (layer.mask[static_cast<std::size_t>(o * layer.in + j)] != 0)
            (*params)[layer.w_offset + static_cast<std::size_t>(o * layer.in + j)] = w;
        }
        (*params)[layer.b_offset + static_cast<std::size_t>(o)] = scale * (2.0 * uniform01(rng) - 1.0);
      }
    }
    const DenseLayer& last = net.layers_.back();
    for (int d = 0; d < n_dims; ++d) {
      for (std::size_t h = 0; h < net.heads_.size(); ++h) {
        const Head& head = net.heads_[h];
        for (int j = 0; j < head.width && !head.init.empty(); ++j)
          (*params)[last.b_offset + static_cast<std::size_t>(net.output_index(d, static_cast<int>(h), j))] =
              head.init[static_cast<std::size_t>(j)];
      }
    }
  }
  return net;
}

Eigen::MatrixXd MaskedNet::connectivity() const {
  Eigen::MatrixXd total = Eigen::MatrixXd::Identity(n_dims_, n_dims_);
  for (const DenseLayer& layer : layers_) {
    Eigen::MatrixXd m(layer.out, layer.in);
    for (int o = 0; o < layer.out; ++o)
      for (int j = 0; j < layer.in; ++j) m(o, j) = layer.mask[static_cast<std::size_t>(o * layer.in + j)];
    total = m * total;
  }
  return total;
}

}  // namespace waveflow
