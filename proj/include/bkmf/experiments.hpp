#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "bkmf/core.hpp"

namespace bkmf {

// Portable deterministic Gaussian source: mt19937_64 driven Box-Muller, so a
// reimplementation in another language can reproduce the streams exactly.
struct Rng {
  std::mt19937_64 eng;
  bool have_spare = false;
  double spare = 0.0;

  explicit Rng(uint64_t seed) : eng(seed) {}

  // Uniform on (0, 1), never exactly 0 or 1.
  double uniform() {
    return (double(eng() >> 11) + 0.5) * (1.0 / 9007199254740992.0);
  }
  double gauss() {
    if (have_spare) {
      have_spare = false;
      return spare;
    }
    const double u = uniform(), v = uniform();
    const double r = std::sqrt(-2.0 * std::log(u));
    const double w = 6.283185307179586476925286766559 * v;
    spare = r * std::sin(w);
    have_spare = true;
    return r * std::cos(w);
  }
  // Column-major fill order (deterministic and documented).
  Cmat real_block(Index n, Index s) {
    Cmat b(n, s);
    for (Index c = 0; c < s; ++c)
      for (Index r = 0; r < n; ++r) b(r, c) = gauss();
    return b;
  }
};

struct ExperimentConfig {
  std::string experiment;
  Index n = 0;      // size override; 0 keeps the experiment default
  Index s = 0;      // block width override
  Index jmax = 0;   // iteration range override
  std::uint64_t seed = 20240915;
  int runs = 10;    // averaging repetitions for randomized experiments
  std::string out_dir = ".";
  bool paper_scale = false;  // full-size parameters instead of desk scale
};

// One averaged measurement row. For the timings experiment, `j` holds the
// problem size and the time fields are populated instead of the bounds.
struct RunRecord {
  Index j = 0;
  double error = 0.0;
  double bound_M = 0.0;
  double bound_L = 0.0;
  double t_total = 0.0;
  double t_bound_M = 0.0;
  double t_bound_L = 0.0;
};

struct ExperimentTable {
  std::string name;          // data file stem
  std::vector<RunRecord> rows;
  double error_floor = 0.0;  // 100 * eps * ||f(A)B||_F, averaged
  bool bounds_valid = true;  // bounds dominate error wherever error > floor
  Index bl_divergence_onset = -1;  // first j where bound_L blew up (-1: never)
};

struct ExperimentResult {
  std::vector<ExperimentTable> tables;
  std::vector<std::string> files;  // paths written (data files + summary)
  bool valid = true;
  std::string summary;
};

const std::vector<std::string>& experiment_names();

// Runs one experiment, writes its data files and summary.txt into
// cfg.out_dir, and reports the measurement tables for programmatic checks.
ExperimentResult run_experiment(const ExperimentConfig& cfg);

// ASCII writer: one row per line, space separated, %.16e (binary64
// round-trippable), no header.
void emit_dat(const std::vector<std::vector<double>>& rows, const std::string& path);

}  // namespace bkmf
