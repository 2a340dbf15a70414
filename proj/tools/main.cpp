// Command-line driver: experiment orchestration and report emission.

#include <cstdio>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "roughburgers/experiment.hpp"
#include "roughburgers/io.hpp"

namespace {

struct CommonFlags {
  std::string config_path;
  std::string out_dir;
  std::uint64_t seed = 0;
  bool seed_set = false;
  int m = 0;
  double dt = 0.0;
  double eps = -1.0;
  int ensemble = 0;
  int threads = 0;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--config", f.config_path, "config file (key = value sections)");
  cmd->add_option("--out", f.out_dir, "output directory");
  cmd->add_option_function<std::uint64_t>(
      "--seed", [&f](std::uint64_t s) { f.seed = s; f.seed_set = true; }, "base seed");
  cmd->add_option("--m", f.m, "spatial cells");
  cmd->add_option("--dt", f.dt, "time step");
  cmd->add_option("--eps", f.eps, "mollification scale");
  cmd->add_option("--ensemble", f.ensemble, "ensemble size");
  cmd->add_option("--threads", f.threads, "worker threads over seeds");
}

rough::ExperimentConfig build_config(const CommonFlags& f, const std::string& fallback_id) {
  rough::ExperimentConfig cfg;
  if (!f.config_path.empty()) {
    cfg = rough::load_config(f.config_path);
  } else {
    cfg = rough::parse_config_text("[solver]\nu0 = beta_sample\n");
  }
  if (cfg.id.empty()) cfg.id = fallback_id;
  if (f.seed_set) {
    cfg.seed_base = f.seed;
    cfg.solver.seed = f.seed;
  }
  if (f.m > 0) {
    cfg.solver.m = f.m;
    cfg.solver.u0 = rough::sample_beta_holder(rough::SpatialGrid(f.m), cfg.solver.n,
                                              cfg.solver.beta,
                                              cfg.solver.seed ^ 0xA5A5A5A5ULL, 0.5);
  }
  if (f.dt > 0.0) cfg.solver.dt = f.dt;
  if (f.eps >= 0.0) cfg.solver.eps = f.eps;
  if (f.ensemble > 0) cfg.ensemble = f.ensemble;
  if (f.threads > 0) cfg.threads = f.threads;
  if (!f.out_dir.empty()) cfg.out_dir = f.out_dir;
  return cfg;
}

int finish(const rough::Report& rep, const rough::ExperimentConfig& cfg,
           const std::string& stem) {
  std::cout << rough::emit(rep, rough::EmitFormat::csv);
  if (!cfg.out_dir.empty()) {
    rough::emit_to_dir(rep, cfg.out_dir, stem);
    rough::write_file(cfg.out_dir + "/" + stem + "_config.txt", rough::config_echo(cfg));
  }
  std::cout << (rep.passed ? "PASS" : "FAIL") << "\n";
  return rep.passed ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"rough Burgers-type SPDE experiments"};
  app.require_subcommand(1);

  CommonFlags f_sim, f_conv, f_rates, f_corr, f_grad, f_val;
  std::string rate_kind = "rough_integral_order";

  CLI::App* sim = app.add_subcommand("simulate", "one solve with artifact dumps");
  add_common(sim, f_sim);
  CLI::App* conv = app.add_subcommand("convergence", "mollification stability study");
  add_common(conv, f_conv);
  CLI::App* rates = app.add_subcommand("rates", "rate and exponent studies");
  add_common(rates, f_rates);
  rates->add_option("--kind", rate_kind,
                    "rough_integral_order|remainder_scaling|kernel_bounds|holder_exponents");
  CLI::App* corr = app.add_subcommand("correction", "reference-lift correction experiment");
  add_common(corr, f_corr);
  CLI::App* grad = app.add_subcommand("gradient", "gradient-case consistency study");
  add_common(grad, f_grad);
  CLI::App* val = app.add_subcommand("validate", "library invariant suite");
  add_common(val, f_val);

  CLI11_PARSE(app, argc, argv);

  try {
    if (sim->parsed()) {
      auto cfg = build_config(f_sim, "simulate");
      return finish(rough::run_simulate(cfg), cfg, "simulate");
    }
    if (conv->parsed()) {
      auto cfg = build_config(f_conv, "convergence");
      if (cfg.eps_ladder.empty()) cfg.eps_ladder = {0.125, 0.0625, 0.03125, 0.015625};
      return finish(rough::run_convergence(cfg), cfg, "convergence");
    }
    if (rates->parsed()) {
      auto cfg = build_config(f_rates, "rates");
      return finish(rough::run_rate_study(cfg, rough::rate_study_from_string(rate_kind)), cfg,
                    "rates_" + rate_kind);
    }
    if (corr->parsed()) {
      auto cfg = build_config(f_corr, "correction");
      return finish(rough::run_correction(cfg), cfg, "correction");
    }
    if (grad->parsed()) {
      auto cfg = build_config(f_grad, "gradient");
      return finish(rough::run_gradient(cfg), cfg, "gradient");
    }
    if (val->parsed()) {
      auto cfg = build_config(f_val, "validate");
      return finish(rough::run_validate(cfg), cfg, "validate");
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}
