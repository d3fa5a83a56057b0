// Command-line front end: generate, factorize, uniqueness, evaluate, project.

#include <CLI11.hpp>

#include <cstdio>
#include <exception>
#include <filesystem>
#include <functional>
#include <iostream>
#include <optional>
#include <string>

#include "qnmf/config.hpp"
#include "qnmf/harness.hpp"
#include "qnmf/io.hpp"
#include "qnmf/version.hpp"

namespace fs = std::filesystem;
using qnmf::config::json;

namespace {

struct Overrides {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> rank;
  std::optional<std::size_t> restarts;
  std::optional<std::size_t> max_iters;
  std::optional<double> stop_delta;
  std::optional<double> ridge;
  bool project_input = false;
  std::optional<std::string> out;
};

json load_config(const std::string& path) {
  return qnmf::config::parse_json(qnmf::io::read_file(path), path);
}

fs::path config_dir(const std::string& path) { return fs::absolute(path).parent_path(); }

/// --out is taken relative to the working directory; the config's "out" relative to the config file.
std::string resolve_out(const std::string& from_config, const Overrides& o, const fs::path& base) {
  if (o.out) return *o.out;
  return qnmf::config::resolve(from_config, base);
}

int run_generate(const Overrides& o) {
  auto c = qnmf::config::generate_from_json(load_config(o.config_path));
  c.out = resolve_out(c.out, o, config_dir(o.config_path));
  if (o.seed) c.seed = *o.seed;
  const auto res = qnmf::harness::cmd_generate(c);
  std::cout << "wrote " << res.x_path.string() << " (" << res.dataset.X.rows() << " bands x " << res.dataset.X.cols()
            << " pixels, " << res.dataset.truth.rank() << " sources)\n";
  return 0;
}

int run_factorize(const Overrides& o) {
  auto c = qnmf::config::factorize_from_json(load_config(o.config_path));
  const fs::path base = config_dir(o.config_path);
  c.input = qnmf::config::resolve(c.input, base);
  c.out = resolve_out(c.out, o, base);
  if (o.seed) c.solver.seed = *o.seed;
  if (o.rank) c.solver.rank = *o.rank;
  if (o.restarts) c.solver.restarts = *o.restarts;
  if (o.max_iters) c.solver.max_iters = *o.max_iters;
  if (o.stop_delta) c.solver.stop_delta = *o.stop_delta;
  if (o.ridge) c.solver.gram_ridge = *o.ridge;
  if (o.project_input) c.project_input = true;
  const auto res = qnmf::harness::cmd_factorize(c);
  const auto& r = res.report;
  std::cout << "restart " << r["selected_restart"].get<std::size_t>() << " selected: eps "
            << r["final_error"].get<double>() << " after " << r["iterations"].get<std::size_t>() << " iterations"
            << (r["converged"].get<bool>() ? "" : " (not converged)") << "; mean iterations "
            << r["mean_iterations"].get<double>() << "\n";
  if (res.projected_entries > 0) std::cout << "projected " << res.projected_entries << " infeasible input entries\n";
  std::cout << "wrote " << res.report_path.string() << "\n";
  return 0;
}

int run_uniqueness(const Overrides& o) {
  auto c = qnmf::config::uniqueness_from_json(load_config(o.config_path));
  const fs::path base = config_dir(o.config_path);
  c.w = qnmf::config::resolve(c.w, base);
  c.h = qnmf::config::resolve(c.h, base);
  c.out = resolve_out(c.out, o, base);
  const auto res = qnmf::harness::cmd_uniqueness(c);
  const auto& r = res.report;
  const auto& nec = r["necessary_a1_a2"];
  if (nec["applicable"].get<bool>()) {
    std::cout << "A1/A2 " << (nec["holds"].get<bool>() ? "hold" : "violated") << "\n";
  } else {
    std::cout << "A1/A2 not applicable: " << nec["note"].get<std::string>() << "\n";
  }
  if (r["intervals"].is_null()) {
    std::cout << r["intervals_note"].get<std::string>() << "\n";
  } else {
    const auto& iv = r["intervals"];
    std::cout << "qnmf alpha " << iv["qnmf_alpha"]["lo"].dump() << " .. " << iv["qnmf_alpha"]["hi"].dump()
              << ", beta " << iv["qnmf_beta"]["lo"].dump() << " .. " << iv["qnmf_beta"]["hi"].dump() << "\n"
              << "unique: " << (iv["unique"].get<bool>() ? "yes" : "no") << "\n";
  }
  std::cout << "wrote " << res.report_path.string() << "\n";
  return 0;
}

int run_evaluate(const Overrides& o) {
  auto c = qnmf::config::evaluate_from_json(load_config(o.config_path));
  const fs::path base = config_dir(o.config_path);
  for (std::string* p : {&c.est_w, &c.est_h, &c.truth_w, &c.truth_h}) *p = qnmf::config::resolve(*p, base);
  c.out = resolve_out(c.out, o, base);
  const auto res = qnmf::harness::cmd_evaluate(c);
  std::cout << "eps_W " << res.alignment.error_w << ", eps_H " << res.alignment.error_h << "\n";
  return 0;
}

int run_project(const Overrides& o) {
  auto c = qnmf::config::project_from_json(load_config(o.config_path));
  const fs::path base = config_dir(o.config_path);
  c.input = qnmf::config::resolve(c.input, base);
  c.out = resolve_out(c.out, o, base);
  const auto res = qnmf::harness::cmd_project(c);
  std::cout << "projected " << res.changed << " entries (max displacement " << res.max_displacement << ")\n"
            << "wrote " << res.output_path.string() << "\n";
  return 0;
}

template <typename T>
void add_optional(CLI::App* app, const std::string& name, std::optional<T>& target, const std::string& help) {
  app->add_option_function<T>(name, [&target](const T& v) { target = v; }, help);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Quaternion non-negative matrix factorization of spectro-polarimetric data"};
  app.set_version_flag("--version", std::string(qnmf::kVersion));
  app.require_subcommand(1);

  Overrides o;
  std::function<int(const Overrides&)> action;

  const auto command = [&](const char* name, const char* help, int (*fn)(const Overrides&)) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("--config", o.config_path, "JSON config file")->required()->check(CLI::ExistingFile);
    add_optional(sub, "--out", o.out, "output directory (overrides the config)");
    sub->callback([&action, fn] { action = fn; });
    return sub;
  };

  CLI::App* gen = command("generate", "generate a synthetic dataset with ground truth", run_generate);
  add_optional(gen, "--seed", o.seed, "random seed");

  CLI::App* fac = command("factorize", "run multi-restart QALS on a Stokes table", run_factorize);
  add_optional(fac, "--seed", o.seed, "base seed; restart r uses seed + r");
  add_optional(fac, "--rank", o.rank, "number of sources");
  add_optional(fac, "--restarts", o.restarts, "number of random restarts");
  add_optional(fac, "--max-iters", o.max_iters, "iteration cap per restart");
  add_optional(fac, "--stop-delta", o.stop_delta, "stop when the relative error changes by at most this");
  add_optional(fac, "--ridge", o.ridge, "ridge added to the Gram matrices");
  fac->add_flag("--project-input", o.project_input, "project infeasible data entries onto the cone");

  command("uniqueness", "admissible-solution analysis of a factor pair", run_uniqueness);
  command("evaluate", "align estimated factors to ground truth and report errors", run_evaluate);
  command("project", "project every entry of a Stokes table onto the cone", run_project);

  CLI11_PARSE(app, argc, argv);

  try {
    return action(o);
  } catch (const qnmf::ConfigError& e) {
    std::cerr << "config error in " << o.config_path << ": " << e.what() << "\n";
    return 2;
  } catch (const qnmf::ParseError& e) {
    std::cerr << "parse error: " << e.what() << "\n";
    return 2;
  } catch (const qnmf::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
