#pragma once

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "qnmf/errors.hpp"
#include "qnmf/qals.hpp"
#include "qnmf/stokes.hpp"
#include "qnmf/synth.hpp"

// JSON run configurations for the command-line harness. Readers reject unknown
// keys and wrong types with the dotted path of the offending field.

namespace qnmf::config {

using json = nlohmann::ordered_json;
namespace fs = std::filesystem;

struct GenerateConfig {
  /// "three-source", "two-source", or empty for explicit sources/activations.
  std::string preset = "three-source";
  std::size_t bands = 128;
  std::size_t height = 64;
  std::size_t width = 64;
  std::uint64_t seed = 0;
  double noise_sigma = 0.0;
  std::vector<synth::SourceSpec> sources;
  std::optional<synth::ActivationSpec> activations;
  std::string out = "out";

  friend bool operator==(const GenerateConfig&, const GenerateConfig&) = default;
};

struct FactorizeConfig {
  std::string input;
  SolverConfig solver;
  /// Project slightly infeasible data onto the cone instead of rejecting it.
  bool project_input = false;
  double cone_tol = kConeTol;
  std::string out = "out";

  friend bool operator==(const FactorizeConfig&, const FactorizeConfig&) = default;
};

struct UniquenessConfig {
  std::string w;
  std::string h;
  /// Interval endpoints within this distance of 0 count as 0.
  double zero_tol = 1e-9;
  /// Tolerance for "fully polarized" and "distinct state" in the condition checks.
  double state_tol = 1e-9;
  bool envelopes = true;
  std::string out = "out";

  friend bool operator==(const UniquenessConfig&, const UniquenessConfig&) = default;
};

struct EvaluateConfig {
  std::string est_w;
  std::string est_h;
  std::string truth_w;
  std::string truth_h;
  std::string out = "out";

  friend bool operator==(const EvaluateConfig&, const EvaluateConfig&) = default;
};

struct ProjectConfig {
  std::string input;
  std::string out = "out";

  friend bool operator==(const ProjectConfig&, const ProjectConfig&) = default;
};

/// Parses JSON text, turning syntax errors into ParseError with a line number.
inline json parse_json(std::string_view text, const std::string& path) {
  try {
    return json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    std::size_t line = 1;
    const std::size_t end = std::min<std::size_t>(e.byte == 0 ? 0 : e.byte - 1, text.size());
    for (std::size_t i = 0; i < end; ++i) line += text[i] == '\n';
    std::string msg = e.what();
    if (const auto pos = msg.find("syntax error"); pos != std::string::npos) msg = msg.substr(pos);
    throw ParseError(path, line, msg);
  }
}

namespace detail {

inline std::string join(const std::string& path, std::string_view key) {
  return path.empty() ? std::string(key) : path + "." + std::string(key);
}

inline std::string index(const std::string& path, std::size_t i) { return path + "[" + std::to_string(i) + "]"; }

inline void read_value(const json& j, const std::string& path, double& out) {
  if (!j.is_number()) throw ConfigError(path, "expected a number");
  out = j.get<double>();
}

inline void read_value(const json& j, const std::string& path, bool& out) {
  if (!j.is_boolean()) throw ConfigError(path, "expected true or false");
  out = j.get<bool>();
}

inline void read_value(const json& j, const std::string& path, std::string& out) {
  if (!j.is_string()) throw ConfigError(path, "expected a string");
  out = j.get<std::string>();
}

inline void read_value(const json& j, const std::string& path, std::uint64_t& out) {
  if (!j.is_number_unsigned()) throw ConfigError(path, "expected a non-negative integer");
  out = j.get<std::uint64_t>();
}

/// Field-by-field reader for one JSON object.
class ObjectReader {
 public:
  ObjectReader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_.empty() ? "<root>" : path_, "expected an object");
  }

  const json* find(const char* key) {
    seen_.insert(key);
    const auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  template <typename T>
  bool optional(const char* key, T& out) {
    const json* v = find(key);
    if (v == nullptr) return false;
    read_value(*v, field(key), out);
    return true;
  }

  template <typename T>
  void required(const char* key, T& out) {
    if (!optional(key, out)) throw ConfigError(field(key), "missing required field");
  }

  std::string field(std::string_view key) const { return join(path_, key); }

  /// Rejects keys that were never looked up.
  void finish() const {
    for (const auto& [key, value] : j_.items()) {
      if (!seen_.contains(key)) throw ConfigError(field(key), "unknown field");
    }
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string, std::less<>> seen_;
};

template <typename T, typename Fn>
std::vector<T> read_array(const json& j, const std::string& path, Fn&& read_one) {
  if (!j.is_array()) throw ConfigError(path, "expected an array");
  std::vector<T> out;
  for (std::size_t i = 0; i < j.size(); ++i) out.push_back(read_one(j[i], index(path, i)));
  return out;
}

inline synth::Bump read_bump(const json& j, const std::string& path) {
  ObjectReader r(j, path);
  synth::Bump b;
  r.required("center", b.center);
  r.required("width", b.width);
  r.required("amplitude", b.amplitude);
  r.finish();
  return b;
}

inline synth::AxisKeyframe read_keyframe(const json& j, const std::string& path) {
  ObjectReader r(j, path);
  synth::AxisKeyframe k;
  r.optional("band", k.band);
  k.axis = Quaternion{};
  r.required("i", k.axis.im_i);
  r.required("j", k.axis.im_j);
  r.required("k", k.axis.im_k);
  r.finish();
  return k;
}

inline synth::Blob read_blob(const json& j, const std::string& path) {
  ObjectReader r(j, path);
  synth::Blob b;
  r.required("row", b.row);
  r.required("col", b.col);
  r.required("sigma", b.sigma);
  r.required("amplitude", b.amplitude);
  r.finish();
  return b;
}

inline synth::SourceSpec read_source(const json& j, const std::string& path, std::size_t bands) {
  ObjectReader r(j, path);
  synth::SourceSpec s;
  s.num_bands = bands;
  if (const json* v = r.find("intensity_profile")) {
    s.intensity_profile = read_array<synth::Bump>(*v, r.field("intensity_profile"), read_bump);
  }
  r.optional("floor", s.floor);
  if (const json* v = r.find("dop_profile")) {
    const std::string at = r.field("dop_profile");
    if (v->is_number()) {
      s.dop_profile = {v->get<double>()};
    } else {
      s.dop_profile = read_array<double>(*v, at, [](const json& e, const std::string& p) {
        double d = 0.0;
        read_value(e, p, d);
        return d;
      });
    }
  }
  if (const json* v = r.find("axis_profile")) {
    s.axis_profile = read_array<synth::AxisKeyframe>(*v, r.field("axis_profile"), read_keyframe);
  }
  r.finish();
  s.validate(path);
  return s;
}

inline synth::ActivationSpec read_activations(const json& j, const std::string& path, std::size_t height,
                                              std::size_t width) {
  ObjectReader r(j, path);
  synth::ActivationSpec a;
  a.height = height;
  a.width = width;
  if (const json* v = r.find("blobs")) {
    const std::string at = r.field("blobs");
    a.blobs = read_array<std::vector<synth::Blob>>(*v, at, [](const json& e, const std::string& p) {
      return read_array<synth::Blob>(e, p, read_blob);
    });
  } else {
    throw ConfigError(r.field("blobs"), "missing required field");
  }
  r.optional("cutoff", a.cutoff);
  r.optional("ensure_pure_pixels", a.ensure_pure_pixels);
  r.optional("floor", a.floor);
  r.finish();
  a.validate(path);
  return a;
}

inline json write_source(const synth::SourceSpec& s) {
  json j;
  j["intensity_profile"] = json::array();
  for (const auto& b : s.intensity_profile) {
    j["intensity_profile"].push_back({{"center", b.center}, {"width", b.width}, {"amplitude", b.amplitude}});
  }
  j["floor"] = s.floor;
  j["dop_profile"] = s.dop_profile;
  j["axis_profile"] = json::array();
  for (const auto& k : s.axis_profile) {
    j["axis_profile"].push_back({{"band", k.band}, {"i", k.axis.im_i}, {"j", k.axis.im_j}, {"k", k.axis.im_k}});
  }
  return j;
}

inline json write_activations(const synth::ActivationSpec& a) {
  json j;
  j["blobs"] = json::array();
  for (const auto& list : a.blobs) {
    json arr = json::array();
    for (const auto& b : list) {
      arr.push_back({{"row", b.row}, {"col", b.col}, {"sigma", b.sigma}, {"amplitude", b.amplitude}});
    }
    j["blobs"].push_back(arr);
  }
  j["cutoff"] = a.cutoff;
  j["ensure_pure_pixels"] = a.ensure_pure_pixels;
  j["floor"] = a.floor;
  return j;
}

}  // namespace detail

inline SolverConfig solver_from_json(const json& j, const std::string& path = "solver") {
  detail::ObjectReader r(j, path);
  SolverConfig c;
  r.optional("rank", c.rank);
  r.optional("max_iters", c.max_iters);
  r.optional("stop_delta", c.stop_delta);
  r.optional("seed", c.seed);
  r.optional("restarts", c.restarts);
  r.optional("gram_ridge", c.gram_ridge);
  r.optional("threads", c.threads);
  r.finish();
  try {
    c.validate();
  } catch (const ConfigError& e) {
    throw ConfigError(detail::join(path, e.field()), e.message());
  }
  return c;
}

inline json to_json(const SolverConfig& c) {
  return {{"rank", c.rank},       {"max_iters", c.max_iters}, {"stop_delta", c.stop_delta},
          {"seed", c.seed},       {"restarts", c.restarts},   {"gram_ridge", c.gram_ridge},
          {"threads", c.threads}};
}

inline GenerateConfig generate_from_json(const json& j) {
  detail::ObjectReader r(j, "");
  GenerateConfig c;
  r.optional("preset", c.preset);
  r.optional("bands", c.bands);
  if (const json* g = r.find("grid")) {
    detail::ObjectReader gr(*g, "grid");
    gr.required("height", c.height);
    gr.required("width", c.width);
    gr.finish();
  }
  r.optional("seed", c.seed);
  r.optional("noise_sigma", c.noise_sigma);
  const json* sources = r.find("sources");
  const json* activations = r.find("activations");
  r.optional("out", c.out);
  r.finish();

  if (c.bands == 0) throw ConfigError("bands", "must be >= 1");
  if (c.height == 0 || c.width == 0) throw ConfigError("grid", "height and width must be >= 1");
  if (!(c.noise_sigma >= 0.0)) throw ConfigError("noise_sigma", "must be >= 0");
  if (!c.preset.empty()) {
    if (c.preset != "three-source" && c.preset != "two-source") {
      throw ConfigError("preset", "unknown preset '" + c.preset + "' (expected three-source, two-source or \"\")");
    }
    if (sources != nullptr) throw ConfigError("sources", "not allowed together with a preset");
    if (activations != nullptr) throw ConfigError("activations", "not allowed together with a preset");
    return c;
  }
  if (sources == nullptr) throw ConfigError("sources", "required when preset is empty");
  if (activations == nullptr) throw ConfigError("activations", "required when preset is empty");
  const std::size_t bands = c.bands;
  c.sources = detail::read_array<synth::SourceSpec>(
      *sources, "sources", [bands](const json& e, const std::string& p) { return detail::read_source(e, p, bands); });
  if (c.sources.empty()) throw ConfigError("sources", "needs at least one source");
  c.activations = detail::read_activations(*activations, "activations", c.height, c.width);
  if (c.activations->blobs.size() != c.sources.size()) {
    throw ConfigError("activations.blobs", "needs one entry per source (" + std::to_string(c.sources.size()) + ")");
  }
  return c;
}

inline json to_json(const GenerateConfig& c) {
  json j;
  j["preset"] = c.preset;
  j["bands"] = c.bands;
  j["grid"] = {{"height", c.height}, {"width", c.width}};
  j["seed"] = c.seed;
  j["noise_sigma"] = c.noise_sigma;
  if (c.preset.empty()) {
    j["sources"] = json::array();
    for (const auto& s : c.sources) j["sources"].push_back(detail::write_source(s));
    if (c.activations) j["activations"] = detail::write_activations(*c.activations);
  }
  j["out"] = c.out;
  return j;
}

inline FactorizeConfig factorize_from_json(const json& j) {
  detail::ObjectReader r(j, "");
  FactorizeConfig c;
  r.required("input", c.input);
  if (const json* s = r.find("solver")) c.solver = solver_from_json(*s, "solver");
  r.optional("project_input", c.project_input);
  r.optional("cone_tol", c.cone_tol);
  r.optional("out", c.out);
  r.finish();
  if (!(c.cone_tol >= 0.0)) throw ConfigError("cone_tol", "must be >= 0");
  return c;
}

inline json to_json(const FactorizeConfig& c) {
  return {{"input", c.input},
          {"solver", to_json(c.solver)},
          {"project_input", c.project_input},
          {"cone_tol", c.cone_tol},
          {"out", c.out}};
}

inline UniquenessConfig uniqueness_from_json(const json& j) {
  detail::ObjectReader r(j, "");
  UniquenessConfig c;
  r.required("w", c.w);
  r.required("h", c.h);
  r.optional("zero_tol", c.zero_tol);
  r.optional("state_tol", c.state_tol);
  r.optional("envelopes", c.envelopes);
  r.optional("out", c.out);
  r.finish();
  if (!(c.zero_tol >= 0.0)) throw ConfigError("zero_tol", "must be >= 0");
  if (!(c.state_tol >= 0.0)) throw ConfigError("state_tol", "must be >= 0");
  return c;
}

inline json to_json(const UniquenessConfig& c) {
  return {{"w", c.w},           {"h", c.h},
          {"zero_tol", c.zero_tol}, {"state_tol", c.state_tol},
          {"envelopes", c.envelopes}, {"out", c.out}};
}

inline EvaluateConfig evaluate_from_json(const json& j) {
  detail::ObjectReader r(j, "");
  EvaluateConfig c;
  r.required("est_w", c.est_w);
  r.required("est_h", c.est_h);
  r.required("truth_w", c.truth_w);
  r.required("truth_h", c.truth_h);
  r.optional("out", c.out);
  r.finish();
  return c;
}

inline json to_json(const EvaluateConfig& c) {
  return {{"est_w", c.est_w}, {"est_h", c.est_h}, {"truth_w", c.truth_w}, {"truth_h", c.truth_h}, {"out", c.out}};
}

inline ProjectConfig project_from_json(const json& j) {
  detail::ObjectReader r(j, "");
  ProjectConfig c;
  r.required("input", c.input);
  r.optional("out", c.out);
  r.finish();
  return c;
}

inline json to_json(const ProjectConfig& c) { return {{"input", c.input}, {"out", c.out}}; }

/// Makes a relative path absolute against `base` (the config file's directory).
inline std::string resolve(const std::string& p, const fs::path& base) {
  if (p.empty()) return p;
  const fs::path path(p);
  return path.is_absolute() ? p : (base / path).lexically_normal().string();
}

}  // namespace qnmf::config
