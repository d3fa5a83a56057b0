#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "qnmf/align.hpp"
#include "qnmf/config.hpp"
#include "qnmf/errors.hpp"
#include "qnmf/io.hpp"
#include "qnmf/qals.hpp"
#include "qnmf/stokes.hpp"
#include "qnmf/synth.hpp"
#include "qnmf/uniqueness.hpp"
#include "qnmf/version.hpp"

// Command implementations behind the qnmf tool. Each command reads its inputs,
// writes its outputs plus manifest.json into the output directory, and returns
// the structured report it wrote.

namespace qnmf::harness {

using config::json;
namespace fs = std::filesystem;

inline std::string dump(const json& j) { return j.dump(2) + "\n"; }

/// Endpoint as a JSON number, or "-inf"/"inf" when unbounded.
inline json endpoint_json(double v) {
  if (v == kInf) return "inf";
  if (v == -kInf) return "-inf";
  return v;
}

inline json interval_json(const Interval& iv) {
  return {{"lo", endpoint_json(iv.lo)},
          {"hi", endpoint_json(iv.hi)},
          {"lo_closed", iv.lo_closed},
          {"hi_closed", iv.hi_closed}};
}

inline json optional_index(const std::optional<std::size_t>& v) { return v ? json(*v) : json(nullptr); }

struct Manifest {
  std::string command;
  json config;
  std::optional<std::uint64_t> seed;
  std::vector<fs::path> inputs;
  std::vector<fs::path> outputs;
  json extra = json::object();
};

/// Writes manifest.json: command, resolved config, seed, version and SHA-256
/// digests of every input and output file. Output paths are stored relative to
/// the output directory.
inline fs::path write_manifest(const fs::path& out_dir, const Manifest& m) {
  json j;
  j["command"] = m.command;
  j["version"] = kVersion;
  j["seed"] = m.seed ? json(*m.seed) : json(nullptr);
  j["config"] = m.config;
  j["inputs"] = json::array();
  for (const auto& p : m.inputs) j["inputs"].push_back({{"path", p.string()}, {"sha256", io::sha256_file(p)}});
  j["outputs"] = json::array();
  for (const auto& p : m.outputs) {
    j["outputs"].push_back({{"path", p.lexically_relative(out_dir).string()}, {"sha256", io::sha256_file(p)}});
  }
  for (const auto& [key, value] : m.extra.items()) j[key] = value;
  const fs::path path = out_dir / "manifest.json";
  io::write_atomic(path, dump(j));
  return path;
}

// ---------------------------------------------------------------- generate

struct GenerateResult {
  synth::Dataset dataset;
  /// Explicit form of the config (presets expanded).
  config::GenerateConfig resolved;
  fs::path x_path, w_path, h_path, manifest_path;
};

/// Expands a preset into explicit source and activation specs.
inline config::GenerateConfig resolve_generate(const config::GenerateConfig& c) {
  config::GenerateConfig r = c;
  if (c.preset == "three-source") {
    r.sources = synth::three_source_sources(c.bands);
    r.activations = synth::three_source_activations(c.height, c.width);
  } else if (c.preset == "two-source") {
    r.sources = synth::two_source_sources(c.bands);
    r.activations = synth::two_source_activations(c.height, c.width);
  } else if (!c.preset.empty()) {
    throw ConfigError("preset", "unknown preset '" + c.preset + "'");
  } else if (c.sources.empty() || !c.activations) {
    throw ConfigError("sources", "explicit sources and activations are required when preset is empty");
  }
  r.preset.clear();
  return r;
}

inline GenerateResult cmd_generate(const config::GenerateConfig& c) {
  GenerateResult res;
  res.resolved = resolve_generate(c);
  const auto& r = res.resolved;
  if (r.activations->blobs.size() != r.sources.size()) {
    throw ConfigError("activations.blobs", "needs one entry per source (" + std::to_string(r.sources.size()) + ")");
  }
  res.dataset.truth.W = synth::gen_sources(r.sources, r.seed);
  synth::Activations act = synth::gen_activations(*r.activations, r.seed);
  res.dataset.truth.H = std::move(act.H);
  res.dataset.pure_pixels = std::move(act.pure_pixels);
  res.dataset.X = synth::assemble(res.dataset.truth.W, res.dataset.truth.H, r.noise_sigma, r.seed);

  const fs::path out(c.out);
  res.x_path = out / "X.csv";
  res.w_path = out / "W.csv";
  res.h_path = out / "H.csv";
  io::save_stokes_table(res.x_path, res.dataset.X);
  io::save_w_table(res.w_path, res.dataset.truth.W);
  io::save_h_table(res.h_path, res.dataset.truth.H);

  Manifest m;
  m.command = "generate";
  m.config = config::to_json(r);
  m.seed = r.seed;
  m.outputs = {res.x_path, res.w_path, res.h_path};
  m.extra["preset"] = c.preset;
  m.extra["pure_pixels"] = res.dataset.pure_pixels;
  res.manifest_path = write_manifest(out, m);
  return res;
}

// ---------------------------------------------------------------- factorize

struct FactorizeResult {
  MultiStartReport runs;
  std::size_t projected_entries = 0;
  json report;
  fs::path w_path, h_path, trace_path, report_path, manifest_path;
};

/// Locations of data entries outside the cone.
inline std::vector<std::pair<std::size_t, std::size_t>> infeasible_entries(const QuaternionMatrix& X, double tol) {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (std::size_t m = 0; m < X.rows(); ++m)
    for (std::size_t n = 0; n < X.cols(); ++n)
      if (!in_cone(X(m, n), tol)) out.emplace_back(m, n);
  return out;
}

inline FactorizeResult cmd_factorize(const config::FactorizeConfig& c) {
  c.solver.validate();
  QuaternionMatrix X = io::load_stokes_table(c.input);
  FactorizeResult res;
  const auto bad = infeasible_entries(X, c.cone_tol);
  if (!bad.empty()) {
    if (!c.project_input) {
      throw InfeasibleInput(c.input + ": " + std::to_string(bad.size()) + " entries are not admissible Stokes vectors" +
                            " (first at m=" + std::to_string(bad[0].first) + ", n=" + std::to_string(bad[0].second) +
                            "); use --project-input to project them onto the cone");
    }
    for (const auto& [m, n] : bad) X(m, n) = project_cone(X(m, n));
    res.projected_entries = bad.size();
  }

  res.runs = solve_multistart(X, c.solver);
  const SolveReport& best = res.runs.best_report();

  const fs::path out(c.out);
  res.w_path = out / "W.csv";
  res.h_path = out / "H.csv";
  res.trace_path = out / "trace.csv";
  res.report_path = out / "report.json";
  io::save_w_table(res.w_path, best.factors.W);
  io::save_h_table(res.h_path, best.factors.H);

  std::string trace = "restart,seed,iter,epsilon\n";
  json restarts = json::array();
  double iter_sum = 0.0;
  std::size_t ok = 0;
  for (std::size_t r = 0; r < res.runs.restarts.size(); ++r) {
    const auto& outcome = res.runs.restarts[r];
    json entry = {{"restart", r}, {"seed", outcome.seed}};
    if (outcome.report) {
      const auto& rep = *outcome.report;
      for (std::size_t it = 0; it < rep.residual_trace.size(); ++it) {
        trace += std::to_string(r) + ',' + std::to_string(outcome.seed) + ',' + std::to_string(it) + ',' +
                 io::format_double(rep.residual_trace[it]) + '\n';
      }
      entry["iterations"] = rep.iterations;
      entry["converged"] = rep.converged;
      entry["final_error"] = rep.final_error();
      entry["zero_activation_rows"] = rep.zero_activation_rows;
      iter_sum += static_cast<double>(rep.iterations);
      ++ok;
    } else {
      entry["error"] = outcome.error;
    }
    restarts.push_back(entry);
  }
  io::write_atomic(res.trace_path, trace);

  json& rep = res.report;
  rep["selected_restart"] = res.runs.best;
  rep["seed"] = best.seed;
  rep["final_error"] = best.final_error();
  rep["iterations"] = best.iterations;
  rep["converged"] = best.converged;
  rep["zero_activation_rows"] = best.zero_activation_rows;
  rep["zero_activation_cols"] = best.zero_activation_cols;
  rep["projected_entries"] = res.projected_entries;
  rep["successful_restarts"] = ok;
  rep["failed_restarts"] = res.runs.restarts.size() - ok;
  rep["mean_iterations"] = ok > 0 ? iter_sum / static_cast<double>(ok) : 0.0;
  rep["restarts"] = restarts;
  io::write_atomic(res.report_path, dump(rep));

  Manifest m;
  m.command = "factorize";
  m.config = config::to_json(c);
  m.seed = c.solver.seed;
  m.inputs = {fs::path(c.input)};
  m.outputs = {res.w_path, res.h_path, res.trace_path, res.report_path};
  res.manifest_path = write_manifest(out, m);
  return res;
}

// ---------------------------------------------------------------- uniqueness

struct UniquenessResult {
  json report;
  std::vector<fs::path> envelope_paths;
  fs::path report_path, rows_path, manifest_path;
};

inline UniquenessResult cmd_uniqueness(const config::UniquenessConfig& c) {
  const QuaternionMatrix W = io::load_w_table(c.w);
  const RealMatrix H = io::load_h_table(c.h);
  if (static_cast<std::size_t>(H.rows()) != W.cols()) {
    throw DimensionError("uniqueness: W has " + std::to_string(W.cols()) + " sources but H has " +
                         std::to_string(H.rows()) + " rows");
  }
  if (!in_cone(W)) throw InfeasibleInput("uniqueness: W has entries outside the cone");
  if (H.size() > 0 && H.minCoeff() < 0.0) throw InfeasibleInput("uniqueness: H has negative entries");

  UniquenessResult res;
  const fs::path out(c.out);
  json& rep = res.report;
  const std::size_t rank = W.cols();
  rep["rank"] = rank;
  rep["bands"] = W.rows();
  rep["pixels"] = H.cols();

  const ConditionTolerance tol{c.state_tol, 0.0};
  json necessary;
  try {
    const NecessaryCheck nec = check_necessary_a1_a2(W, H, tol);
    necessary["applicable"] = true;
    necessary["holds"] = nec.holds;
    if (!nec.holds) {
      necessary["violated"] = nec.violated;
      necessary["pair"] = {nec.violating_pair->first, nec.violating_pair->second};
    }
  } catch (const InvalidArgument& e) {
    // The conditions are only stated for sources that never vanish.
    necessary["applicable"] = false;
    necessary["holds"] = nullptr;
    necessary["note"] = e.what();
  }
  rep["necessary_a1_a2"] = necessary;

  const SeparabilityCheck sep = check_prop2_delegate(W, H);
  json w_rows = json::array(), h_cols = json::array();
  for (const auto& r : sep.w_rows) w_rows.push_back(optional_index(r));
  for (const auto& n : sep.h_cols) h_cols.push_back(optional_index(n));
  rep["separability"] = {{"holds", sep.holds()},
                         {"w_separable", sep.w_separable},
                         {"h_separable", sep.h_separable},
                         {"w_rows", w_rows},
                         {"h_cols", h_cols}};

  std::vector<fs::path> outputs;
  if (rank != 2) {
    rep["intervals"] = nullptr;
    rep["intervals_note"] = "interval analysis and the C1/C2 check need exactly 2 sources; got " +
                            std::to_string(rank) + ", so only the necessary-condition and separability checks ran";
  } else {
    const AdmissibilityReport adm = admissibility_report(W, H, c.zero_tol);
    rep["intervals"] = {{"nmf_alpha", interval_json(adm.nmf_alpha)},
                        {"nmf_beta", interval_json(adm.nmf_beta)},
                        {"qnmf_alpha", interval_json(adm.qnmf_alpha)},
                        {"qnmf_beta", interval_json(adm.qnmf_beta)},
                        {"unique", adm.unique},
                        {"binding_rows",
                         {{"alpha_lo", optional_index(adm.binding_alpha_lo)},
                          {"alpha_hi", optional_index(adm.binding_alpha_hi)},
                          {"beta_lo", optional_index(adm.binding_beta_lo)},
                          {"beta_hi", optional_index(adm.binding_beta_hi)}}}};

    const SufficientCheck suf = check_sufficient_c1_c2(W, H, tol);
    rep["sufficient_c1_c2"] = {{"holds", suf.holds},
                               {"c1", suf.c1},
                               {"c2", suf.c2},
                               {"m1", optional_index(suf.m1)},
                               {"m2", optional_index(suf.m2)},
                               {"n1", optional_index(suf.n1)},
                               {"n2", optional_index(suf.n2)},
                               {"same_row", suf.collapsed},
                               {"c1_alternate_reading", suf.c1_mixed_reading},
                               {"readings_disagree", suf.readings_disagree}};

    res.rows_path = out / "row_intervals.csv";
    std::string rows = "m,alpha_lo,alpha_hi,beta_lo,beta_hi\n";
    const auto cell = [](double v) {
      if (v == kInf) return std::string("inf");
      if (v == -kInf) return std::string("-inf");
      return io::format_double(v);
    };
    for (std::size_t m = 0; m < W.rows(); ++m) {
      rows += std::to_string(m) + ',' + cell(adm.pol_alpha_rows[m].lo) + ',' + cell(adm.pol_alpha_rows[m].hi) + ',' +
              cell(adm.pol_beta_rows[m].lo) + ',' + cell(adm.pol_beta_rows[m].hi) + '\n';
    }
    io::write_atomic(res.rows_path, rows);
    outputs.push_back(res.rows_path);

    if (c.envelopes) {
      const QnmfFactors f{W, H};
      json env = json::array();
      const auto emit = [&](const char* name, double alpha, double beta) {
        if (!std::isfinite(alpha) || !std::isfinite(beta)) return;
        const fs::path p = out / (std::string("envelope_") + name + ".csv");
        io::save_w_table(p, apply_transform(f, alpha, beta).W);
        env.push_back({{"file", p.filename().string()}, {"alpha", alpha}, {"beta", beta}});
        res.envelope_paths.push_back(p);
        outputs.push_back(p);
      };
      if (!adm.qnmf_alpha.is_zero(c.zero_tol)) {
        emit("alpha_lo", adm.qnmf_alpha.lo, 0.0);
        emit("alpha_hi", adm.qnmf_alpha.hi, 0.0);
      }
      if (!adm.qnmf_beta.is_zero(c.zero_tol)) {
        emit("beta_lo", 0.0, adm.qnmf_beta.lo);
        emit("beta_hi", 0.0, adm.qnmf_beta.hi);
      }
      rep["envelopes"] = env;
    }
  }

  res.report_path = out / "uniqueness.json";
  io::write_atomic(res.report_path, dump(rep));
  outputs.insert(outputs.begin(), res.report_path);

  Manifest m;
  m.command = "uniqueness";
  m.config = config::to_json(c);
  m.inputs = {fs::path(c.w), fs::path(c.h)};
  m.outputs = outputs;
  res.manifest_path = write_manifest(out, m);
  return res;
}

// ---------------------------------------------------------------- evaluate

struct EvaluateResult {
  Alignment alignment;
  json metrics;
  fs::path metrics_path, manifest_path;
};

inline EvaluateResult cmd_evaluate(const config::EvaluateConfig& c) {
  const QnmfFactors est{io::load_w_table(c.est_w), io::load_h_table(c.est_h)};
  const QnmfFactors truth{io::load_w_table(c.truth_w), io::load_h_table(c.truth_h)};
  EvaluateResult res;
  res.alignment = align_factors(est, truth);
  res.metrics = {{"error_w", res.alignment.error_w},
                 {"error_h", res.alignment.error_h},
                 {"permutation", res.alignment.permutation},
                 {"scales", res.alignment.scales}};
  const fs::path out(c.out);
  res.metrics_path = out / "metrics.json";
  io::write_atomic(res.metrics_path, dump(res.metrics));

  Manifest m;
  m.command = "evaluate";
  m.config = config::to_json(c);
  m.inputs = {fs::path(c.est_w), fs::path(c.est_h), fs::path(c.truth_w), fs::path(c.truth_h)};
  m.outputs = {res.metrics_path};
  res.manifest_path = write_manifest(out, m);
  return res;
}

// ---------------------------------------------------------------- project

struct ProjectResult {
  /// Entries moved by more than the cone tolerance.
  std::size_t changed = 0;
  double max_displacement = 0.0;
  fs::path output_path, manifest_path;
};

inline ProjectResult cmd_project(const config::ProjectConfig& c) {
  const QuaternionMatrix X = io::load_stokes_table(c.input);
  const QuaternionMatrix P = project_cone(X);
  ProjectResult res;
  for (std::size_t i = 0; i < X.entries().size(); ++i) {
    const double d = abs(X.entries()[i] - P.entries()[i]);
    // Round-off moves boundary entries by a few ulps; only count real moves.
    if (d > kConeTol * std::max(1.0, abs(X.entries()[i]))) ++res.changed;
    res.max_displacement = std::max(res.max_displacement, d);
  }
  const fs::path out(c.out);
  res.output_path = out / "X_projected.csv";
  io::save_stokes_table(res.output_path, P);

  Manifest m;
  m.command = "project";
  m.config = config::to_json(c);
  m.inputs = {fs::path(c.input)};
  m.outputs = {res.output_path};
  m.extra["changed_entries"] = res.changed;
  m.extra["max_displacement"] = res.max_displacement;
  res.manifest_path = write_manifest(out, m);
  return res;
}

}  // namespace qnmf::harness
