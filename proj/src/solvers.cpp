#include "hpen/solvers.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <random>
#include <sstream>

#include "hpen/geometry.hpp"

namespace hpen {

std::string method_name(Method m) {
  switch (m) {
    case Method::FullGrad: return "fullgrad";
    case Method::SAGA: return "saga";
    case Method::TimeVarying: return "timevarying";
    case Method::RandProj: return "randproj";
    case Method::Reference: return "reference";
  }
  return "unknown";
}

Method parse_method(const std::string& name) {
  for (Method m : {Method::FullGrad, Method::SAGA, Method::TimeVarying, Method::RandProj, Method::Reference})
    if (method_name(m) == name) return m;
  throw std::invalid_argument("unknown method '" + name + "'");
}

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void put(std::string& out, double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  out += buf;
}

class Recorder {
 public:
  Recorder(const Objective& obj, const Polyhedron& poly, const TraceOptions& opts)
      : obj_(obj), poly_(poly), opts_(opts), start_(std::chrono::steady_clock::now()) {
    if (opts_.record_every == 0) throw std::invalid_argument("record_every must be >= 1");
    if (opts_.x_ref) require_dim(*opts_.x_ref, poly.n(), "reference point");
  }

  bool due(std::size_t k) const { return k % opts_.record_every == 0; }

  void record(std::size_t k, const Vec& x, const std::optional<PenaltyParams>& pp, double step) {
    TraceRecord r;
    r.k = k;
    r.f = obj_.value(x);
    r.F = pp ? penalized_value(obj_, poly_, *pp, x) : kNaN;
    r.feas_residual = feasibility_residual(x, poly_);
    r.dist_to_ref = opts_.x_ref ? (x - *opts_.x_ref).norm() : kNaN;
    r.gamma = pp ? pp->gamma : kNaN;
    r.delta = pp ? pp->delta : kNaN;
    r.step = step;
    if (opts_.timing)
      r.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start_).count();
    trace.records.push_back(r);
  }

  bool has(std::size_t k) const { return !trace.records.empty() && trace.records.back().k == k; }

  IterateTrace trace;

 private:
  const Objective& obj_;
  const Polyhedron& poly_;
  const TraceOptions& opts_;
  std::chrono::steady_clock::time_point start_;
};

void guard(const Vec& x, std::size_t k, Recorder& rec, const std::optional<PenaltyParams>& pp, double step,
           const char* who) {
  const double nrm = x.norm();
  if (nrm <= kDivergenceNorm) return;
  if (std::isfinite(nrm) && !rec.has(k)) rec.record(k, x, pp, step);
  char msg[160];
  std::snprintf(msg, sizeof msg, "%s diverged at iteration %zu (||x|| = %.3g > %.0e)", who, k, nrm, kDivergenceNorm);
  throw DivergenceError(msg, k, rec.trace);
}

}  // namespace

std::string IterateTrace::to_csv() const {
  std::string out = "k,f,F,feas_residual,dist_to_ref,gamma_k,delta_k,step_k,wall_ms\n";
  for (const auto& r : records) {
    out += std::to_string(r.k);
    for (double v : {r.f, r.F, r.feas_residual, r.dist_to_ref, r.gamma, r.delta, r.step, r.wall_ms}) {
      out += ',';
      put(out, v);
    }
    out += '\n';
  }
  return out;
}

IterateTrace trace_from_csv(const std::string& text) {
  IterateTrace t;
  std::istringstream in(text);
  std::string line;
  std::getline(in, line);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string cell;
    TraceRecord r;
    std::getline(ls, cell, ',');
    r.k = static_cast<std::size_t>(std::stoull(cell));
    double* fields[] = {&r.f, &r.F, &r.feas_residual, &r.dist_to_ref, &r.gamma, &r.delta, &r.step, &r.wall_ms};
    for (double* f : fields) {
      if (!std::getline(ls, cell, ',')) throw std::invalid_argument("trace csv: short row");
      *f = std::strtod(cell.c_str(), nullptr);
    }
    t.records.push_back(r);
  }
  return t;
}

SolveResult solve_full_gradient(const Objective& obj, const Polyhedron& poly, const PenaltyParams& pp,
                                const Vec& x_start, double step, std::size_t max_iter, double tol,
                                const TraceOptions& opts) {
  validate_penalty(pp, true);
  require_dim(x_start, poly.n(), "solve_full_gradient");
  if (!(step > 0.0)) throw std::invalid_argument("solve_full_gradient: step must be > 0");
  Recorder rec(obj, poly, opts);
  SolveResult res;
  Vec x = x_start;
  Vec g(poly.n());
  for (std::size_t t = 0;; ++t) {
    penalized_grad(obj, poly, pp, x, g);
    if (rec.due(t)) rec.record(t, x, pp, step);
    res.iterations = t;
    if (g.norm() <= tol) {
      res.converged = true;
      break;
    }
    if (t == max_iter) break;
    x.noalias() -= step * g;
    guard(x, t + 1, rec, pp, step, "full gradient");
  }
  if (!rec.has(res.iterations)) rec.record(res.iterations, x, pp, step);
  res.x = std::move(x);
  res.trace = std::move(rec.trace);
  return res;
}

void SagaState::refresh_sum() {
  const auto m = static_cast<std::size_t>(stored_grads.rows());
  const auto n = stored_grads.cols();
  Mat partials(n, static_cast<Eigen::Index>((m + kChunkRows - 1) / kChunkRows));
  for (Eigen::Index c = 0; c < partials.cols(); ++c) {
    const auto begin = static_cast<Eigen::Index>(static_cast<std::size_t>(c) * kChunkRows);
    const auto end = std::min<Eigen::Index>(static_cast<Eigen::Index>(m), begin + static_cast<Eigen::Index>(kChunkRows));
    partials.col(c).setZero();
    for (Eigen::Index i = begin; i < end; ++i) partials.col(c) += stored_grads.row(i).transpose();
  }
  tree_reduce_columns(partials);
  grad_sum = partials.col(0);
}

SagaState saga_init(const Objective& obj, const Polyhedron& poly, const PenaltyParams& pp, const Vec& x_start) {
  validate_penalty(pp, true);
  require_dim(x_start, poly.n(), "saga_init");
  const auto m = static_cast<Eigen::Index>(poly.m());
  SagaState st;
  st.x = x_start;
  st.stored_points = x_start.transpose().replicate(m, 1);
  st.stored_grads.resize(m, poly.n());
  Vec g(poly.n());
  for (Eigen::Index i = 0; i < m; ++i) {
    component_grad(obj, poly, pp, static_cast<std::size_t>(i), x_start, g);
    st.stored_grads.row(i) = g.transpose();
  }
  st.refresh_sum();
  return st;
}

void saga_step(const Objective& obj, const Polyhedron& poly, const PenaltyParams& pp, SagaState& st, std::size_t j,
               double alpha, Vec& scratch) {
  const auto r = static_cast<Eigen::Index>(j);
  const double inv_m = 1.0 / static_cast<double>(poly.m());
  component_grad(obj, poly, pp, j, st.x, scratch);
  const Vec change = scratch - st.stored_grads.row(r).transpose();
  const Vec dir = change + inv_m * st.grad_sum;
  st.grad_sum += change;
  st.stored_grads.row(r) = scratch.transpose();
  st.stored_points.row(r) = st.x.transpose();
  st.x.noalias() -= alpha * dir;
}

SolveResult solve_saga(const Objective& obj, const Polyhedron& poly, const PenaltyParams& pp, const Vec& x_start,
                       double step, std::size_t max_iter, std::uint64_t seed, const TraceOptions& opts) {
  if (!(step > 0.0)) throw std::invalid_argument("solve_saga: step must be > 0");
  Recorder rec(obj, poly, opts);
  SagaState st = saga_init(obj, poly, pp, x_start);
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, poly.m() - 1);
  Vec scratch(poly.n());
  rec.record(0, st.x, pp, step);
  for (std::size_t t = 0; t < max_iter; ++t) {
    saga_step(obj, poly, pp, st, pick(rng), step, scratch);
    if ((t + 1) % poly.m() == 0) st.refresh_sum();
    guard(st.x, t + 1, rec, pp, step, "SAGA");
    if (rec.due(t + 1)) rec.record(t + 1, st.x, pp, step);
  }
  if (!rec.has(max_iter)) rec.record(max_iter, st.x, pp, step);
  SolveResult res;
  res.x = std::move(st.x);
  res.iterations = max_iter;
  res.trace = std::move(rec.trace);
  return res;
}

SolveResult solve_time_varying(const Objective& obj, const Polyhedron& poly, const Schedule& schedule,
                               const Vec& x_start, std::size_t max_iter, const TraceOptions& opts) {
  require_dim(x_start, poly.n(), "solve_time_varying");
  Recorder rec(obj, poly, opts);
  SolveResult res;
  Vec x = x_start;
  Vec g(poly.n());
  for (std::size_t t = 0;; ++t) {
    const PenaltyParams pp = schedule.penalty(t + 1);
    const double step = schedule.step(t + 1);
    penalized_grad(obj, poly, pp, x, g);
    if (rec.due(t)) rec.record(t, x, pp, step);
    res.iterations = t;
    if (t == max_iter) break;
    x.noalias() -= step * g;
    guard(x, t + 1, rec, schedule.penalty(t + 2), schedule.step(t + 2), "time-varying gradient");
  }
  if (!rec.has(max_iter)) rec.record(max_iter, x, schedule.penalty(max_iter + 1), schedule.step(max_iter + 1));
  res.x = std::move(x);
  res.trace = std::move(rec.trace);
  return res;
}

SolveResult solve_rand_proj(const Objective& obj, const Polyhedron& poly, const Vec& x_start, std::size_t max_iter,
                            std::uint64_t seed, const TraceOptions& opts) {
  require_dim(x_start, poly.n(), "solve_rand_proj");
  Recorder rec(obj, poly, opts);
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, poly.m() - 1);
  Vec x = x_start;
  Vec g(poly.n());
  rec.record(0, x, std::nullopt, 1.0);
  for (std::size_t t = 1; t <= max_iter; ++t) {
    obj.gradient(x, g);
    x.noalias() -= (1.0 / static_cast<double>(t)) * g;
    x = project_halfspace(x, poly[pick(rng)]).point;
    const double next = 1.0 / static_cast<double>(t + 1);
    guard(x, t, rec, std::nullopt, next, "random projection");
    if (rec.due(t)) rec.record(t, x, std::nullopt, next);
  }
  if (!rec.has(max_iter)) rec.record(max_iter, x, std::nullopt, 1.0 / static_cast<double>(max_iter + 1));
  SolveResult res;
  res.x = std::move(x);
  res.iterations = max_iter;
  res.trace = std::move(rec.trace);
  return res;
}

}  // namespace hpen
