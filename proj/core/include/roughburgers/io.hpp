#pragma once

#include <string>

#include "roughburgers/rough_path.hpp"
#include "roughburgers/solver.hpp"

namespace rough {

// Shortest-round-trip decimal formatting (%.17g), stable across runs.
std::string fmt_double(double x);

// header "x,c0,...,c{n-1}", one row per grid node.
std::string field_to_csv(const Field& f);
Field field_from_csv(const std::string& csv);

// header "i,j,v0,...", upper triangle only.
std::string two_point_to_csv(const TwoPointField& R);

// base field block followed by a per-cell "i,XX[r][c]..." block.
std::string rough_path_to_csv(const RoughPath& rp);

void write_file(const std::string& path, const std::string& content);
std::string read_file(const std::string& path);

// Bundle persistence: directory with config echo, noise replay file, CSV
// field dumps at requested times, and a JSON summary.
void save_bundle(const SolutionBundle& b, const std::string& dir,
                 std::span<const double> dump_times);

}  // namespace rough
