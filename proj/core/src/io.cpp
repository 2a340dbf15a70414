#include "roughburgers/io.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace rough {

std::string fmt_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string field_to_csv(const Field& f) {
  std::ostringstream out;
  out << "x";
  for (int c = 0; c < f.dim(); ++c) out << ",c" << c;
  out << "\n";
  for (int i = 0; i <= f.grid().m; ++i) {
    out << fmt_double(f.grid().point(i));
    for (int c = 0; c < f.dim(); ++c) out << "," << fmt_double(f.at(i, c));
    out << "\n";
  }
  return out.str();
}

Field field_from_csv(const std::string& csv) {
  std::istringstream in(csv);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("field_from_csv: empty input");
  int dim = 0;
  for (char ch : line)
    if (ch == ',') ++dim;
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::istringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) row.push_back(std::strtod(cell.c_str(), nullptr));
    if (static_cast<int>(row.size()) != dim + 1)
      throw std::runtime_error("field_from_csv: ragged row");
    rows.push_back(std::move(row));
  }
  const int m = static_cast<int>(rows.size()) - 1;
  Field f(SpatialGrid(m), dim);
  for (int i = 0; i <= m; ++i)
    for (int c = 0; c < dim; ++c) f.at(i, c) = rows[i][c + 1];
  return f;
}

std::string two_point_to_csv(const TwoPointField& R) {
  std::ostringstream out;
  out << "i,j";
  for (int c = 0; c < R.payload(); ++c) out << ",v" << c;
  out << "\n";
  const int m = R.grid().m;
  for (int i = 0; i <= m; ++i)
    for (int j = i; j <= m; ++j) {
      out << i << "," << j;
      for (double v : R.pair(i, j)) out << "," << fmt_double(v);
      out << "\n";
    }
  return out.str();
}

std::string rough_path_to_csv(const RoughPath& rp) {
  std::ostringstream out;
  out << field_to_csv(rp.base());
  const int n = rp.n();
  out << "i";
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < n; ++c) out << ",XX[" << r << "][" << c << "]";
  out << "\n";
  for (int i = 0; i < rp.cells(); ++i) {
    out << i;
    for (double v : rp.cell(i)) out << "," << fmt_double(v);
    out << "\n";
  }
  return out.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("write_file: cannot open " + path);
  out << content;
  if (!out) throw std::runtime_error("write_file: failed writing " + path);
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("read_file: cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void save_bundle(const SolutionBundle& b, const std::string& dir,
                 std::span<const double> dump_times) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  const SolverConfig& cfg = b.cfg;

  std::ostringstream conf;
  conf << "[solver]\n";
  conf << "n = " << cfg.n << "\n";
  conf << "g = " << cfg.g.name << "\n";
  conf << "theta = " << cfg.theta.name << "\n";
  conf << "alpha = " << fmt_double(cfg.alpha) << "\n";
  conf << "beta = " << fmt_double(cfg.beta) << "\n";
  conf << "m = " << cfg.m << "\n";
  conf << "dt = " << fmt_double(cfg.dt) << "\n";
  conf << "T = " << fmt_double(cfg.T) << "\n";
  conf << "K1 = " << fmt_double(cfg.K1) << "\n";
  conf << "K2 = " << fmt_double(cfg.K2) << "\n";
  conf << "K3 = " << fmt_double(cfg.K3) << "\n";
  conf << "K4 = " << fmt_double(cfg.K4) << "\n";
  conf << "K5 = " << fmt_double(cfg.k5()) << "\n";
  conf << "picard_tol = " << fmt_double(cfg.picard_tol) << "\n";
  conf << "inner_tol = " << fmt_double(cfg.inner_tol) << "\n";
  conf << "seed = " << cfg.seed << "\n";
  conf << "eps = " << fmt_double(cfg.eps) << "\n";
  write_file(dir + "/config.txt", conf.str());

  if (b.has_noise) {
    GeneratorNoise noise(cfg.noise_spec());
    save_noise(noise, dir + "/noise.bin");
  }

  for (double t : dump_times) {
    const int l = static_cast<int>(std::llround(t / b.u.dt));
    if (l < 0 || l > b.u.steps()) continue;
    std::ostringstream name;
    name << dir << "/u_t" << fmt_double(t) << ".csv";
    write_file(name.str(), field_to_csv(b.u.slices[l]));
  }

  nlohmann::json j;
  j["outer_iterations"] = b.outer_iterations;
  j["outer_residuals"] = b.outer_residuals;
  j["inner_iterations"] = nlohmann::json::array();
  for (const auto& h : b.inner_histories) j["inner_iterations"].push_back(h.size());
  j["chunks"] = b.chunks;
  j["noise_draws"] = b.noise_draws;
  j["monitor"]["triggered"] = b.monitor.triggered;
  j["monitor"]["triggered_at"] = b.monitor.triggered_at;
  j["monitor"]["sup_x"] = b.monitor.sup_x;
  j["monitor"]["sup_psi"] = b.monitor.sup_psi;
  j["monitor"]["sup_remainder"] = b.monitor.sup_remainder;
  j["final_sup_norm"] = b.u.slices.back().sup_norm();
  write_file(dir + "/summary.json", j.dump(2) + "\n");
}

}  // namespace rough
