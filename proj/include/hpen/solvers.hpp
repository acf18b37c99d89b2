#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "hpen/params.hpp"
#include "hpen/penalty.hpp"
#include "hpen/problem.hpp"

namespace hpen {

enum class Method { FullGrad, SAGA, TimeVarying, RandProj, Reference };

std::string method_name(Method m);
Method parse_method(const std::string& name);

struct SolverConfig {
  Method method = Method::FullGrad;
  std::size_t max_iter = 1000;
  std::optional<double> step;  // filled from the method's default when empty
  PenaltyParams penalty{1.0, 1e-3};
  std::optional<Schedule> schedule;
  std::uint64_t seed = 0;
  std::size_t record_every = 1;
  double tol = 0.0;
};

struct TraceRecord {
  std::size_t k = 0;
  double f = 0.0;
  double F = 0.0;
  double feas_residual = 0.0;
  double dist_to_ref = 0.0;
  double gamma = 0.0;
  double delta = 0.0;
  double step = 0.0;
  double wall_ms = 0.0;
};

struct IterateTrace {
  std::vector<TraceRecord> records;
  std::string to_csv() const;
};

IterateTrace trace_from_csv(const std::string& text);

struct TraceOptions {
  std::size_t record_every = 1;
  std::optional<Vec> x_ref;  // dist_to_ref is NaN without it
  bool timing = false;       // wall_ms is 0 unless set
};

struct SolveResult {
  Vec x;
  IterateTrace trace;
  std::size_t iterations = 0;
  bool converged = false;
};

class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(const std::string& what, std::size_t iteration, IterateTrace trace)
      : std::runtime_error(what), iteration_(iteration), trace_(std::move(trace)) {}
  std::size_t iteration() const { return iteration_; }
  const IterateTrace& trace() const { return trace_; }

 private:
  std::size_t iteration_;
  IterateTrace trace_;
};

inline constexpr double kDivergenceNorm = 1e12;

// x <- x - step grad F(x); stops after max_iter steps or once ||grad F|| <= tol.
SolveResult solve_full_gradient(const Objective& obj, const Polyhedron& poly, const PenaltyParams& pp,
                                const Vec& x_start, double step, std::size_t max_iter, double tol,
                                const TraceOptions& opts = {});

struct SagaState {
  Vec x;
  RowMat stored_points;  // phi_i
  RowMat stored_grads;   // grad g_i(phi_i)
  Vec grad_sum;

  // Exact pairwise recomputation of grad_sum from stored_grads.
  void refresh_sum();
};

SagaState saga_init(const Objective& obj, const Polyhedron& poly, const PenaltyParams& pp, const Vec& x_start);
// One SAGA update with component j (zero-based) and step alpha.
void saga_step(const Objective& obj, const Polyhedron& poly, const PenaltyParams& pp, SagaState& st, std::size_t j,
               double alpha, Vec& scratch);

SolveResult solve_saga(const Objective& obj, const Polyhedron& poly, const PenaltyParams& pp, const Vec& x_start,
                       double step, std::size_t max_iter, std::uint64_t seed, const TraceOptions& opts = {});

// Row k holds the iterate after k steps with the schedule entry k + 1 that
// acts on it next.
SolveResult solve_time_varying(const Objective& obj, const Polyhedron& poly, const Schedule& schedule,
                               const Vec& x_start, std::size_t max_iter, const TraceOptions& opts = {});

// x <- Proj_{X_w}[x - (1/t) grad f(x)], t = 1, 2, ..., w uniform.
SolveResult solve_rand_proj(const Objective& obj, const Polyhedron& poly, const Vec& x_start, std::size_t max_iter,
                            std::uint64_t seed, const TraceOptions& opts = {});

// Exact minimizer of ||Phi x - x0||^2 over the polyhedron. Full column rank
// Phi goes through LSI -> LDP -> NNLS with an active-set KKT polish; otherwise
// projected gradient is used.
Vec solve_reference(const QuadraticObjective& obj, const Polyhedron& poly, const Vec& x_start, double tol = 1e-12);

// Projected gradient with Dykstra projections and step 1/L_f.
Vec solve_reference_projected(const Objective& obj, const Polyhedron& poly, const Vec& x_start, double tol = 1e-12,
                              std::size_t max_iter = 1000000);

// min ||E u - f|| subject to u >= 0 (Lawson-Hanson).
struct NnlsResult {
  Vec u;
  double residual = 0.0;
  std::size_t iterations = 0;
  bool converged = false;
};
NnlsResult nnls(const Mat& E, const Vec& f, std::size_t max_iter = 0);

}  // namespace hpen
