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

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "waveflow/flow.hpp"

namespace waveflow {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

namespace {

constexpr char kMagic[4] = {'W', 'V', 'F', 'L'};

template <class T>
void put(std::string& out, T v) {
  char buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  out.append(buf, sizeof(T));
}

template <class T>
T get(std::istream& in, const std::filesystem::path& path) {
  T v{};
  if (!in.read(reinterpret_cast<char*>(&v), sizeof(T)))
    throw CheckpointMismatch("truncated checkpoint: " + path.string());
  return v;
}

}  // namespace

CheckpointHeader header_of(const SquareFlow& flow, double half_length) {
  const FlowConfig& c = flow.config();
  CheckpointHeader h;
  h.n_dims = static_cast<std::uint32_t>(c.n_dims);
  h.n_layers = static_cast<std::uint32_t>(c.n_layers);
  h.order = static_cast<std::uint32_t>(c.order);
  h.n_basis = static_cast<std::uint32_t>(c.n_basis);
  h.hidden_width = static_cast<std::uint32_t>(c.hidden_width);
  h.half_length = half_length;
  h.n_params = flow.n_params();
  return h;
}

void write_file_atomic(const std::filesystem::path& path, const std::string& bytes) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open " + tmp.string() + " for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    out.flush();
    if (!out) throw Error("failed writing " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

void save_checkpoint(const std::filesystem::path& path, const SquareFlow& flow, double half_length) {
  const CheckpointHeader h = header_of(flow, half_length);
  std::string bytes(kMagic, sizeof(kMagic));
  put(bytes, h.version);
  put(bytes, h.n_dims);
  put(bytes, h.n_layers);
  put(bytes, h.order);
  put(bytes, h.n_basis);
  put(bytes, h.hidden_width);
  put(bytes, h.half_length);
  put(bytes, h.n_params);
  for (double p : flow.params()) put(bytes, p);
  write_file_atomic(path, bytes);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointMismatch("cannot open checkpoint " + path.string());
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0)
    throw CheckpointMismatch("not a waveflow checkpoint: " + path.string());
  Checkpoint c;
  c.header.version = get<std::uint32_t>(in, path);
  if (c.header.version != 1) throw CheckpointMismatch("unsupported checkpoint version");
  c.header.n_dims = get<std::uint32_t>(in, path);
  c.header.n_layers = get<std::uint32_t>(in, path);
  c.header.order = get<std::uint32_t>(in, path);
  c.header.n_basis = get<std::uint32_t>(in, path);
  c.header.hidden_width = get<std::uint32_t>(in, path);
  c.header.half_length = get<double>(in, path);
  c.header.n_params = get<std::uint64_t>(in, path);
  if (c.header.n_params > (std::uint64_t{1} << 32)) throw CheckpointMismatch("implausible parameter count");
  c.params.resize(c.header.n_params);
  for (double& p : c.params) p = get<double>(in, path);
  return c;
}

void restore_checkpoint(const Checkpoint& checkpoint, SquareFlow& flow, double half_length) {
  const CheckpointHeader expected = header_of(flow, half_length);
  if (!(checkpoint.header == expected)) {
    std::ostringstream msg;
    msg << "checkpoint header (dims " << checkpoint.header.n_dims << ", layers " << checkpoint.header.n_layers
        << ", order " << checkpoint.header.order << ", basis " << checkpoint.header.n_basis << ", hidden "
        << checkpoint.header.hidden_width << ", L " << checkpoint.header.half_length << ", params " << checkpoint.header.n_params
        << ") does not match the configured model (dims " << expected.n_dims << ", layers " << expected.n_layers
        << ", order " << expected.order << ", basis " << expected.n_basis << ", hidden " << expected.hidden_width
        << ", L " << expected.half_length << ", params " << expected.n_params << ")";
    throw CheckpointMismatch(msg.str());
  }
  flow.mutable_params() = checkpoint.params;
}

}  // namespace waveflow
