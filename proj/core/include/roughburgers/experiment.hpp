#pragma once

#include <map>
#include <string>
#include <vector>

#include "roughburgers/solver.hpp"

namespace rough {

struct ExperimentConfig {
  std::string id;
  SolverConfig solver;
  int ensemble = 1;
  std::uint64_t seed_base = 1;
  std::vector<double> eps_ladder;
  std::vector<int> m_ladder;
  std::string out_dir;
  int threads = 2;

  void validate() const;
};

struct ReportRow {
  std::string experiment;
  std::vector<std::pair<std::string, std::string>> params;  // ordered key/value
  std::string metric;
  double value = 0.0;
  double dispersion = 0.0;
  std::uint64_t seed_lo = 0, seed_hi = 0;
};

struct Report {
  std::vector<ReportRow> rows;
  bool passed = true;  // all configured checks green
};

// key = value sections ([solver], [experiment]); unknown keys rejected.
ExperimentConfig parse_config_text(const std::string& text);
ExperimentConfig load_config(const std::string& path);
std::string config_echo(const ExperimentConfig& cfg);

// Mollification stability: paired solve / solve_mollified per seed over the
// eps ladder; medians must decrease strictly down the ladder.
Report run_convergence(const ExperimentConfig& cfg);

enum class RateStudy {
  rough_integral_order,
  remainder_scaling,
  kernel_bounds,
  holder_exponents,
};
RateStudy rate_study_from_string(const std::string& s);

Report run_rate_study(const ExperimentConfig& cfg, RateStudy kind);

// Paired-lift runs; ratio ||B-C|| / ||B-A|| per seed.
Report run_correction(const ExperimentConfig& cfg);

// Gradient-case rewrite discrepancy across the m ladder.
Report run_gradient(const ExperimentConfig& cfg);

// Smoke run of one solve with artifact dumps.
Report run_simulate(const ExperimentConfig& cfg);

// Invariant suite (library-level checks runnable from the CLI).
Report run_validate(const ExperimentConfig& cfg);

enum class EmitFormat { csv, json };
// Deterministic field order; CSV columns
// experiment,params,metric,value,dispersion,seed_lo,seed_hi.
std::string emit(const Report& report, EmitFormat format);
void emit_to_dir(const Report& report, const std::string& dir, const std::string& stem);
Report parse_report_csv(const std::string& csv);

// Deterministic seed-parallel map: fn(k) for k in [0, count), results merged
// in index order regardless of scheduling.
void parallel_seeds(int count, int threads, const std::function<void(int)>& fn);

// Median and interquartile range.
struct Quartiles { double median = 0.0, iqr = 0.0; };
Quartiles quartiles(std::vector<double> v);

}  // namespace rough
