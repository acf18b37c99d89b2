#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "hpen/problem.hpp"
#include "hpen/solvers.hpp"

namespace hpen {

// SplitMix64 mix of (master, stream).
std::uint64_t split_seed(std::uint64_t master, std::uint64_t stream);

namespace streams {
inline constexpr std::uint64_t kInstance = 0;
inline constexpr std::uint64_t kStart = 1;
inline constexpr std::uint64_t kSampling = 2;
}  // namespace streams

struct RegressionInstance {
  QuadraticObjective obj;
  Polyhedron poly;
  SlaterCertificate slater;
};

inline constexpr double kSlaterEps = 0.01;

// x0 ~ N(0, 10), Phi ~ U[-1, 1], A, b ~ N(0, 100) (variances). Any b_i below
// 0.01 is redrawn as |N(0, 100)| + 0.01, so x = 0 has margin >= 0.01.
RegressionInstance generate_regression_instance(Eigen::Index n, Eigen::Index l, std::size_t m, std::uint64_t seed);

struct ExperimentSpec {
  std::string name;
  Eigen::Index n = 30;
  Eigen::Index l = 30;
  std::size_t m = 500;
  std::vector<std::uint64_t> seeds;
  std::size_t iterations = 1000;
  std::size_t record_every = 10;
  double delta0 = 1e-2;
  bool timing = false;

  // gamma sweep: gamma = g * 100 m^2 for g in gamma_grid
  std::vector<double> gamma_grid;
  double delta = 1e-3;
  std::optional<double> step;  // default m delta / gamma_min

  // comparison tuning grid: gamma = g * m, delta from tune_deltas
  std::vector<double> tune_gamma_per_m{10.0, 100.0, 1000.0};
  std::vector<double> tune_deltas{1e-2, 1e-3, 1e-4};
};

struct CellResult {
  std::uint64_t seed = 0;
  std::string label;
  double gamma = 0.0;
  double delta = 0.0;
  double step = 0.0;
  double rel_error = 0.0;  // ||x_T - x*|| / ||x*||
  double abs_error = 0.0;
  double ref_norm = 0.0;
  double feas_residual = 0.0;
  bool feasible = false;
  double f_gap = 0.0;
  bool diverged = false;
  std::string instance_hash;
  IterateTrace trace;
};

struct Aggregate {
  std::string label;
  std::size_t runs = 0;
  double mean = 0.0;    // of rel_error
  double median = 0.0;  // of rel_error
  double feasible_fraction = 0.0;
};

struct RunRecord {
  std::string experiment;
  ExperimentSpec spec;
  std::vector<std::string> labels;
  std::vector<CellResult> cells;  // seed-major, then label order
  std::vector<Aggregate> aggregates;

  const CellResult& cell(std::size_t seed_index, std::size_t label_index) const {
    return cells[seed_index * labels.size() + label_index];
  }
};

double median_of(std::vector<double> v);
std::vector<Aggregate> aggregate_cells(const std::vector<CellResult>& cells, const std::vector<std::string>& labels);
std::string gamma_label(double multiplier);

// Full gradient per (gamma, seed) from x ~ N(0, 10 I), shared step.
RunRecord run_gamma_sweep(const ExperimentSpec& spec);
// RandProj vs tuned PA/SAGA per seed, both from the origin.
RunRecord run_method_comparison(const ExperimentSpec& spec);

// Median relative error per recorded iteration and label; missing entries
// (diverged runs) count as +inf.
std::string median_curves_csv(const RunRecord& rec);
std::string aggregate_csv(const RunRecord& rec);

struct Manifest {
  std::vector<std::pair<std::string, std::string>> files;  // relative path, git blob sha1
  std::string json;
};

// out_dir/<experiment>/<seed>/<label>.csv, aggregate.csv, curves.csv, manifest.json
Manifest persist_run(const RunRecord& rec, const std::filesystem::path& out_dir);

}  // namespace hpen
