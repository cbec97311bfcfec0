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

#include "waveflow/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <iomanip>
#include <map>
#include <set>
#include <sstream>

namespace waveflow {

namespace {

struct Value {
  enum class Kind { Number, Bool, String } kind = Kind::Number;
  std::string text;
  int line = 0;
};

struct Field {
  const char* section;
  const char* key;
  std::function<void(RunConfig&, const Value&)> set;
  std::function<std::string(const RunConfig&)> get;
};

std::string quote(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  return out + "\"";
}

std::string number(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  std::string s = os.str();
  if (s.find_first_of(".eEn") == std::string::npos) s += ".0";
  return s;
}

double as_double(const Value& v) {
  if (v.kind != Value::Kind::Number) throw ConfigError("expected a number", v.line);
  double out = 0.0;
  const auto* end = v.text.data() + v.text.size();
  const auto [ptr, ec] = std::from_chars(v.text.data(), end, out);
  if (ec != std::errc() || ptr != end) throw ConfigError("invalid number '" + v.text + "'", v.line);
  return out;
}

long long as_integer(const Value& v) {
  if (v.kind != Value::Kind::Number) throw ConfigError("expected an integer", v.line);
  long long out = 0;
  const auto* end = v.text.data() + v.text.size();
  const auto [ptr, ec] = std::from_chars(v.text.data(), end, out);
  if (ec != std::errc() || ptr != end) throw ConfigError("invalid integer '" + v.text + "'", v.line);
  return out;
}

int as_int(const Value& v) {
  const long long x = as_integer(v);
  if (x < std::numeric_limits<int>::min() || x > std::numeric_limits<int>::max())
    throw ConfigError("integer out of range", v.line);
  return static_cast<int>(x);
}

std::string as_string(const Value& v) {
  if (v.kind != Value::Kind::String) throw ConfigError("expected a quoted string", v.line);
  return v.text;
}

template <class F>
auto rethrow_at(const Value& v, F&& f) {
  try {
    return f();
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError(e.what(), v.line);
  }
}

#define WF_INT(sec, name, member)                                                           \
  Field {                                                                                    \
    sec, name, [](RunConfig& c, const Value& v) { c.member = as_int(v); },                   \
        [](const RunConfig& c) { return std::to_string(c.member); }                          \
  }
#define WF_DOUBLE(sec, name, member)                                                        \
  Field {                                                                                    \
    sec, name, [](RunConfig& c, const Value& v) { c.member = as_double(v); },                \
        [](const RunConfig& c) { return number(c.member); }                                  \
  }

const std::vector<Field>& fields() {
  static const std::vector<Field> table = {
      Field{"system", "hamiltonian",
            [](RunConfig& c, const Value& v) {
              c.system.hamiltonian.kind = rethrow_at(v, [&] { return parse_hamiltonian_kind(as_string(v)); });
            },
            [](const RunConfig& c) { return quote(to_string(c.system.hamiltonian.kind)); }},
      WF_INT("system", "n_particles", system.hamiltonian.n_particles),
      WF_DOUBLE("system", "half_length", system.half_length),
      WF_DOUBLE("system", "charge", system.hamiltonian.charge),
      WF_DOUBLE("system", "interaction", system.hamiltonian.interaction),
      WF_DOUBLE("system", "softening", system.hamiltonian.softening),
      WF_DOUBLE("system", "omega", system.hamiltonian.omega),
      WF_INT("model", "order", model.order),
      WF_INT("model", "n_knots", model.n_knots),
      WF_INT("model", "n_layers", model.n_layers),
      WF_INT("model", "hidden_width", model.hidden_width),
      WF_INT("model", "n_hidden_layers", model.n_hidden_layers),
      Field{"model", "coordinates",
            [](RunConfig& c, const Value& v) {
              c.model.coordinates = rethrow_at(v, [&] { return parse_coordinate_choice(as_string(v)); });
            },
            [](const RunConfig& c) { return quote(to_string(c.model.coordinates)); }},
      WF_DOUBLE("model", "eps_regularize", model.eps_regularize),
      WF_DOUBLE("training", "learning_rate", training.learning_rate),
      WF_INT("training", "batch_size", training.batch_size),
      WF_INT("training", "epochs", training.epochs),
      Field{"training", "seed",
            [](RunConfig& c, const Value& v) {
              if (v.kind != Value::Kind::Number) throw ConfigError("expected an integer", v.line);
              if (!v.text.empty() && v.text.front() == '-') throw ConfigError("seed must be non-negative", v.line);
              std::uint64_t s = 0;
              const auto* end = v.text.data() + v.text.size();
              const auto [ptr, ec] = std::from_chars(v.text.data(), end, s);
              if (ec != std::errc() || ptr != end) throw ConfigError("invalid seed '" + v.text + "'", v.line);
              c.training.seed = s;
            },
            [](const RunConfig& c) { return std::to_string(c.training.seed); }},
      WF_INT("training", "baseline_window", training.baseline_window),
      WF_INT("training", "variance_window", training.variance_window),
      WF_DOUBLE("training", "clip_norm", training.clip_norm),
      WF_INT("training", "max_resample", training.max_resample),
      WF_INT("training", "workers", training.workers),
      Field{"output", "directory", [](RunConfig& c, const Value& v) { c.output.directory = as_string(v); },
            [](const RunConfig& c) { return quote(c.output.directory); }},
      WF_INT("output", "checkpoint_every", output.checkpoint_every),
      WF_INT("oracle", "grid_points", oracle.grid_points),
      WF_INT("oracle", "coarse_grid_points", oracle.coarse_grid_points),
      WF_INT("oracle", "n_states", oracle.n_states),
      WF_INT("oracle", "memory_cap_mb", oracle.memory_cap_mb),
  };
  return table;
}

#undef WF_INT
#undef WF_DOUBLE

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

/// Strips a trailing comment that is not inside a string.
std::string strip_comment(const std::string& s) {
  bool in_string = false;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '\\' && in_string) {
      ++i;
    } else if (s[i] == '"') {
      in_string = !in_string;
    } else if (s[i] == '#' && !in_string) {
      return s.substr(0, i);
    }
  }
  return s;
}

Value parse_value(const std::string& raw, int line) {
  Value v;
  v.line = line;
  if (raw.empty()) throw ConfigError("missing value", line);
  if (raw.front() == '"') {
    if (raw.size() < 2 || raw.back() != '"') throw ConfigError("unterminated string", line);
    v.kind = Value::Kind::String;
    for (std::size_t i = 1; i + 1 < raw.size(); ++i) {
      if (raw[i] == '\\' && i + 2 < raw.size()) ++i;
      v.text += raw[i];
    }
    return v;
  }
  if (raw == "true" || raw == "false") {
    v.kind = Value::Kind::Bool;
    v.text = raw;
    return v;
  }
  v.kind = Value::Kind::Number;
  for (char c : raw) {
    if (c != '_') v.text += c;
  }
  if (!v.text.empty() && v.text.front() == '+') v.text.erase(0, 1);
  return v;
}

}  // namespace

FlowConfig RunConfig::flow_config() const {
  FlowConfig f;
  f.n_dims = system.hamiltonian.n_particles;
  f.n_layers = model.n_layers;
  f.order = model.order;
  f.n_basis = n_basis();
  f.hidden_width = model.hidden_width;
  f.n_hidden_layers = model.n_hidden_layers;
  f.eps_regularize = model.eps_regularize;
  f.seed = training.seed;
  return f;
}

WaveflowModel RunConfig::make_model() const {
  return WaveflowModel(SquareFlow(flow_config()), BoxGeometry{system.half_length}, model.coordinates);
}

void validate(const RunConfig& c) {
  if (c.system.hamiltonian.n_particles < 1) throw InvalidConfiguration("n_particles must be at least 1");
  if (!(c.system.half_length > 0.0)) throw InvalidConfiguration("half_length must be positive");
  if (!(c.system.hamiltonian.softening > 0.0)) throw InvalidConfiguration("softening must be positive");
  if (c.model.order < 4) throw InvalidConfiguration("order must be at least 4");
  if (c.n_basis() < c.model.order)
    throw InvalidConfiguration("n_knots must be at least twice the order (clamped ends)");
  if (c.model.n_layers < 1) throw InvalidConfiguration("n_layers must be positive");
  if (c.model.hidden_width < 1 || c.model.n_hidden_layers < 1)
    throw InvalidConfiguration("network sizes must be positive");
  if (!(c.model.eps_regularize >= 0.0)) throw InvalidConfiguration("eps_regularize must be non-negative");
  validate(c.training);
  if (c.output.checkpoint_every < 0) throw InvalidConfiguration("checkpoint_every must be non-negative");
  if (c.oracle.grid_points < 16) throw InvalidConfiguration("grid_points must be at least 16");
  if (c.oracle.coarse_grid_points != 0 && c.oracle.coarse_grid_points < 16)
    throw InvalidConfiguration("coarse_grid_points must be 0 or at least 16");
  if (c.oracle.n_states < 1) throw InvalidConfiguration("n_states must be positive");
  if (c.oracle.memory_cap_mb < 1) throw InvalidConfiguration("memory_cap_mb must be positive");
}

RunConfig parse_config(const std::string& text) {
  RunConfig config;
  std::map<std::pair<std::string, std::string>, const Field*> index;
  std::set<std::string> sections;
  for (const Field& f : fields()) {
    index[{f.section, f.key}] = &f;
    sections.insert(f.section);
  }
  std::set<std::pair<std::string, std::string>> seen;
  std::istringstream in(text);
  std::string raw_line;
  std::string section;
  int line = 0;
  while (std::getline(in, raw_line)) {
    ++line;
    const std::string s = trim(strip_comment(raw_line));
    if (s.empty()) continue;
    if (s.front() == '[') {
      if (s.back() != ']') throw ConfigError("malformed section header", line);
      section = trim(s.substr(1, s.size() - 2));
      if (!sections.count(section)) throw ConfigError("unknown section [" + section + "]", line);
      continue;
    }
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw ConfigError("expected key = value", line);
    const std::string key = trim(s.substr(0, eq));
    if (section.empty()) throw ConfigError("key '" + key + "' outside of a section", line);
    const auto it = index.find({section, key});
    if (it == index.end()) throw ConfigError("unknown key '" + key + "' in [" + section + "]", line);
    if (!seen.insert({section, key}).second) throw ConfigError("duplicate key '" + key + "'", line);
    it->second->set(config, parse_value(trim(s.substr(eq + 1)), line));
  }
  try {
    validate(config);
  } catch (const InvalidConfiguration& e) {
    throw ConfigError(e.what(), 0);
  }
  return config;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string(), 0);
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config(text.str());
}

std::string serialize_config(const RunConfig& config) {
  std::ostringstream out;
  std::string section;
  for (const Field& f : fields()) {
    if (section != f.section) {
      if (!section.empty()) out << '\n';
      section = f.section;
      out << '[' << section << "]\n";
    }
    out << f.key << " = " << f.get(config) << '\n';
  }
  return out.str();
}

}  // namespace waveflow
