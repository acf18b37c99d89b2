#include "hpen/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <random>
#include <set>
#include <stdexcept>

#include <json.hpp>

#include "hpen/geometry.hpp"
#include "hpen/io.hpp"
#include "hpen/params.hpp"

namespace hpen {

using nlohmann::json;

std::uint64_t split_seed(std::uint64_t master, std::uint64_t stream) {
  std::uint64_t z = master + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

RegressionInstance generate_regression_instance(Eigen::Index n, Eigen::Index l, std::size_t m, std::uint64_t seed) {
  if (n < 1 || l < 1 || m < 1) throw std::invalid_argument("generate_regression_instance: n, l, m must be >= 1");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> x0_dist(0.0, std::sqrt(10.0));
  std::uniform_real_distribution<double> phi_dist(-1.0, 1.0);
  std::normal_distribution<double> ab_dist(0.0, 10.0);

  Vec x0(l);
  for (Eigen::Index i = 0; i < l; ++i) x0(i) = x0_dist(rng);
  Mat phi(l, n);
  for (Eigen::Index r = 0; r < l; ++r)
    for (Eigen::Index c = 0; c < n; ++c) phi(r, c) = phi_dist(rng);
  std::vector<LinearConstraint> cons(m);
  for (auto& c : cons) {
    c.a.resize(n);
    for (Eigen::Index j = 0; j < n; ++j) c.a(j) = ab_dist(rng);
  }
  for (auto& c : cons) c.b = ab_dist(rng);
  for (auto& c : cons)
    while (c.b < kSlaterEps) c.b = std::abs(ab_dist(rng)) + kSlaterEps;

  Polyhedron poly(std::move(cons));
  SlaterCertificate slater{Vec::Zero(n), slater_margin(poly, Vec::Zero(n))};
  return {QuadraticObjective(std::move(phi), std::move(x0)), std::move(poly), std::move(slater)};
}

double median_of(std::vector<double> v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const std::size_t h = v.size() / 2;
  return v.size() % 2 == 1 ? v[h] : 0.5 * (v[h - 1] + v[h]);
}

std::vector<Aggregate> aggregate_cells(const std::vector<CellResult>& cells, const std::vector<std::string>& labels) {
  std::vector<Aggregate> out;
  for (const auto& label : labels) {
    Aggregate a;
    a.label = label;
    std::vector<double> errs;
    std::size_t feasible = 0;
    for (const auto& c : cells) {
      if (c.label != label) continue;
      errs.push_back(c.rel_error);
      feasible += c.feasible ? 1 : 0;
    }
    a.runs = errs.size();
    if (a.runs > 0) {
      double s = 0.0;
      for (double e : errs) s += e;
      a.mean = s / static_cast<double>(a.runs);
      a.median = median_of(errs);
      a.feasible_fraction = static_cast<double>(feasible) / static_cast<double>(a.runs);
    }
    out.push_back(a);
  }
  return out;
}

std::string gamma_label(double multiplier) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "gamma_x%g", multiplier);
  return buf;
}

namespace {

struct SeedContext {
  RegressionInstance inst;
  Vec x_ref;
  double f_ref;
  std::string hash;
};

SeedContext prepare(const ExperimentSpec& spec, std::uint64_t seed) {
  RegressionInstance inst = generate_regression_instance(spec.n, spec.l, spec.m, split_seed(seed, streams::kInstance));
  Vec x_ref = solve_reference(inst.obj, inst.poly, Vec::Zero(spec.n));
  const double f_ref = inst.obj.value(x_ref);
  std::string hash = git_blob_sha1(instance_to_json(inst.obj, inst.poly));
  return {std::move(inst), std::move(x_ref), f_ref, std::move(hash)};
}

void finish_cell(CellResult& c, const SeedContext& ctx, const Vec& x) {
  c.ref_norm = ctx.x_ref.norm();
  c.abs_error = (x - ctx.x_ref).norm();
  c.rel_error = c.ref_norm > 0.0 ? c.abs_error / c.ref_norm : c.abs_error;
  c.feas_residual = feasibility_residual(x, ctx.inst.poly);
  c.feasible = c.feas_residual == 0.0;
  c.f_gap = ctx.inst.obj.value(x) - ctx.f_ref;
  c.instance_hash = ctx.hash;
}

void mark_diverged(CellResult& c, const SeedContext& ctx, const DivergenceError& e) {
  constexpr double inf = std::numeric_limits<double>::infinity();
  c.ref_norm = ctx.x_ref.norm();
  c.abs_error = inf;
  c.rel_error = inf;
  c.feas_residual = inf;
  c.feasible = false;
  c.f_gap = inf;
  c.diverged = true;
  c.instance_hash = ctx.hash;
  c.trace = e.trace();
}

template <class Body>
void for_each_seed(const std::vector<std::uint64_t>& seeds, Body body) {
  std::vector<std::string> errors(seeds.size());
  const auto count = static_cast<long long>(seeds.size());
#pragma omp parallel for schedule(dynamic, 1)
  for (long long s = 0; s < count; ++s) {
    try {
      body(static_cast<std::size_t>(s));
    } catch (const std::exception& e) {
      errors[static_cast<std::size_t>(s)] = e.what();
    }
  }
  for (std::size_t s = 0; s < seeds.size(); ++s)
    if (!errors[s].empty()) throw std::runtime_error("seed " + std::to_string(seeds[s]) + ": " + errors[s]);
}

void require_spec(const ExperimentSpec& spec) {
  if (spec.seeds.empty()) throw std::invalid_argument("experiment: seed list is empty");
  if (spec.iterations < 1) throw std::invalid_argument("experiment: iterations must be >= 1");
  if (spec.record_every < 1) throw std::invalid_argument("experiment: record_every must be >= 1");
}

}  // namespace

RunRecord run_gamma_sweep(const ExperimentSpec& spec) {
  require_spec(spec);
  if (spec.gamma_grid.empty()) throw std::invalid_argument("run_gamma_sweep: gamma grid is empty");
  if (!(spec.delta > 0.0)) throw std::invalid_argument("run_gamma_sweep: delta must be > 0");
  RunRecord rec;
  rec.experiment = spec.name.empty() ? "sweep-gamma" : spec.name;
  rec.spec = spec;
  const double md = static_cast<double>(spec.m);
  const double gamma_base = 100.0 * md * md;
  const double gamma_min = *std::min_element(spec.gamma_grid.begin(), spec.gamma_grid.end()) * gamma_base;
  const double step = spec.step.value_or(md * spec.delta / gamma_min);
  rec.spec.step = step;
  for (double g : spec.gamma_grid) rec.labels.push_back(gamma_label(g));
  const std::size_t nl = rec.labels.size();
  rec.cells.resize(spec.seeds.size() * nl);

  for_each_seed(spec.seeds, [&](std::size_t s) {
    const std::uint64_t seed = spec.seeds[s];
    const SeedContext ctx = prepare(spec, seed);
    std::mt19937_64 rng(split_seed(seed, streams::kStart));
    std::normal_distribution<double> start_dist(0.0, std::sqrt(10.0));
    Vec start(spec.n);
    for (Eigen::Index i = 0; i < spec.n; ++i) start(i) = start_dist(rng);
    TraceOptions opts{spec.record_every, ctx.x_ref, spec.timing};
    for (std::size_t g = 0; g < nl; ++g) {
      CellResult& c = rec.cells[s * nl + g];
      c.seed = seed;
      c.label = rec.labels[g];
      c.gamma = spec.gamma_grid[g] * gamma_base;
      c.delta = spec.delta;
      c.step = step;
      try {
        SolveResult r = solve_full_gradient(ctx.inst.obj, ctx.inst.poly, {c.gamma, c.delta}, start, step,
                                            spec.iterations, 0.0, opts);
        finish_cell(c, ctx, r.x);
        c.trace = std::move(r.trace);
      } catch (const DivergenceError& e) {
        mark_diverged(c, ctx, e);
      }
    }
  });
  rec.aggregates = aggregate_cells(rec.cells, rec.labels);
  return rec;
}

RunRecord run_method_comparison(const ExperimentSpec& spec) {
  require_spec(spec);
  if (spec.tune_gamma_per_m.empty() || spec.tune_deltas.empty())
    throw std::invalid_argument("run_method_comparison: tuning grid is empty");
  RunRecord rec;
  rec.experiment = spec.name.empty() ? "compare" : spec.name;
  rec.spec = spec;
  rec.labels = {"randproj", "saga"};
  rec.cells.resize(spec.seeds.size() * 2);
  const double md = static_cast<double>(spec.m);

  for_each_seed(spec.seeds, [&](std::size_t s) {
    const std::uint64_t seed = spec.seeds[s];
    const SeedContext ctx = prepare(spec, seed);
    const Vec origin = Vec::Zero(spec.n);
    TraceOptions opts{spec.record_every, ctx.x_ref, spec.timing};

    CellResult& rp = rec.cells[s * 2];
    rp.seed = seed;
    rp.label = "randproj";
    rp.step = 1.0;
    rp.gamma = rp.delta = std::numeric_limits<double>::quiet_NaN();
    try {
      SolveResult r = solve_rand_proj(ctx.inst.obj, ctx.inst.poly, origin, spec.iterations,
                                      split_seed(seed, streams::kSampling), opts);
      finish_cell(rp, ctx, r.x);
      rp.trace = std::move(r.trace);
    } catch (const DivergenceError& e) {
      mark_diverged(rp, ctx, e);
    }

    ProblemConstants k;
    const auto curv = *ctx.inst.obj.curvature();
    k.mu_f = curv.mu_f;
    k.L_f = curv.L_f;
    k.alpha_min = ctx.inst.poly.alpha_min();
    k.alpha_max = ctx.inst.poly.alpha_max();
    std::optional<CellResult> best;
    for (double gm : spec.tune_gamma_per_m) {
      for (double d : spec.tune_deltas) {
        CellResult c;
        c.seed = seed;
        c.label = "saga";
        c.gamma = gm * md;
        c.delta = d;
        c.step = saga_step_size(k, spec.m, {c.gamma, c.delta}, curv.mu_f > 0.0);
        try {
          SolveResult r = solve_saga(ctx.inst.obj, ctx.inst.poly, {c.gamma, c.delta}, origin, c.step,
                                     spec.iterations, split_seed(seed, streams::kSampling + 1), opts);
          finish_cell(c, ctx, r.x);
          c.trace = std::move(r.trace);
        } catch (const DivergenceError& e) {
          mark_diverged(c, ctx, e);
        }
        const bool better = !best || (c.feasible && !best->feasible) ||
                            (c.feasible == best->feasible && c.abs_error < best->abs_error);
        if (better) best = std::move(c);
      }
    }
    rec.cells[s * 2 + 1] = std::move(*best);
  });
  rec.aggregates = aggregate_cells(rec.cells, rec.labels);
  return rec;
}

namespace {

void put(std::string& out, double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  out += buf;
}

json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

}  // namespace

std::string median_curves_csv(const RunRecord& rec) {
  std::set<std::size_t> ks;
  for (const auto& c : rec.cells)
    for (const auto& r : c.trace.records) ks.insert(r.k);
  std::string out = "k";
  for (const auto& l : rec.labels) out += "," + l;
  out += '\n';
  std::vector<std::map<std::size_t, double>> lookup(rec.cells.size());
  for (std::size_t i = 0; i < rec.cells.size(); ++i) {
    const auto& c = rec.cells[i];
    for (const auto& r : c.trace.records)
      lookup[i][r.k] = c.ref_norm > 0.0 ? r.dist_to_ref / c.ref_norm : r.dist_to_ref;
  }
  for (std::size_t k : ks) {
    out += std::to_string(k);
    for (const auto& l : rec.labels) {
      std::vector<double> vals;
      for (std::size_t i = 0; i < rec.cells.size(); ++i) {
        if (rec.cells[i].label != l) continue;
        auto it = lookup[i].find(k);
        vals.push_back(it != lookup[i].end() ? it->second : std::numeric_limits<double>::infinity());
      }
      out += ',';
      put(out, median_of(vals));
    }
    out += '\n';
  }
  return out;
}

std::string aggregate_csv(const RunRecord& rec) {
  std::string out = "label,runs,mean_rel_error,median_rel_error,feasible_fraction\n";
  for (const auto& a : rec.aggregates) {
    out += a.label + "," + std::to_string(a.runs);
    for (double v : {a.mean, a.median, a.feasible_fraction}) {
      out += ',';
      put(out, v);
    }
    out += '\n';
  }
  return out;
}

namespace {

std::string cells_csv(const RunRecord& rec) {
  std::string out = "seed,label,gamma,delta,step,rel_error,abs_error,feas_residual,feasible,f_gap,diverged\n";
  for (const auto& c : rec.cells) {
    out += std::to_string(c.seed) + "," + c.label;
    for (double v : {c.gamma, c.delta, c.step, c.rel_error, c.abs_error, c.feas_residual}) {
      out += ',';
      put(out, v);
    }
    out += c.feasible ? ",1," : ",0,";
    put(out, c.f_gap);
    out += c.diverged ? ",1\n" : ",0\n";
  }
  return out;
}

}  // namespace

Manifest persist_run(const RunRecord& rec, const std::filesystem::path& out_dir) {
  const std::filesystem::path root = out_dir / rec.experiment;
  Manifest man;
  auto emit = [&](const std::string& rel, const std::string& content) {
    write_file(root / rel, content);
    man.files.emplace_back(rel, git_blob_sha1(content));
  };
  for (const auto& c : rec.cells) emit(std::to_string(c.seed) + "/" + c.label + ".csv", c.trace.to_csv());
  emit("cells.csv", cells_csv(rec));
  emit("aggregate.csv", aggregate_csv(rec));
  emit("curves.csv", median_curves_csv(rec));

  const auto& s = rec.spec;
  json j;
  j["experiment"] = rec.experiment;
  j["spec"] = {{"n", s.n},
               {"l", s.l},
               {"m", s.m},
               {"seeds", s.seeds},
               {"iterations", s.iterations},
               {"record_every", s.record_every},
               {"delta0", s.delta0},
               {"gamma_grid", s.gamma_grid},
               {"delta", s.delta},
               {"step", s.step ? json(*s.step) : json(nullptr)},
               {"tune_gamma_per_m", s.tune_gamma_per_m},
               {"tune_deltas", s.tune_deltas},
               {"timing", s.timing}};
  j["conventions"] = {
      {"distributions", "x0 ~ N(0, variance 10), Phi ~ U[-1,1], A and b ~ N(0, variance 100); b_i < 0.01 redrawn as "
                        "|N(0,100)| + 0.01"},
      {"seed_split", "splitmix64(master + golden * (stream + 1)); streams: 0 instance, 1 start point, 2+ sampling"},
      {"relative_error", "||x_T - x*|| / ||x*||, x* from the exact reference solver"},
      {"feasible", "max_i max(<a_i,x> - b_i, 0) == 0"}};
  if (rec.experiment.rfind("sweep", 0) == 0 || !s.gamma_grid.empty())
    j["conventions"]["sweep_protocol"] =
        "full gradient from x ~ N(0, 10 I) (start stream), gamma = g * 100 m^2, shared step m delta / gamma_min";
  if (rec.labels.size() == 2 && rec.labels[0] == "randproj")
    j["conventions"]["compare_protocol"] =
        "both methods start at x = 0; RandProj step 1/t; PA/SAGA best feasible over gamma in tune_gamma_per_m * m and "
        "delta in tune_deltas with the strongly convex SAGA step";
  json cells = json::array();
  for (const auto& c : rec.cells)
    cells.push_back({{"seed", c.seed},
                     {"label", c.label},
                     {"gamma", finite_or_null(c.gamma)},
                     {"delta", finite_or_null(c.delta)},
                     {"step", finite_or_null(c.step)},
                     {"rel_error", finite_or_null(c.rel_error)},
                     {"feasible", c.feasible},
                     {"diverged", c.diverged},
                     {"instance_sha1", c.instance_hash}});
  j["cells"] = std::move(cells);
  json aggs = json::array();
  for (const auto& a : rec.aggregates)
    aggs.push_back({{"label", a.label},
                    {"runs", a.runs},
                    {"mean_rel_error", finite_or_null(a.mean)},
                    {"median_rel_error", finite_or_null(a.median)},
                    {"feasible_fraction", a.feasible_fraction}});
  j["aggregates"] = std::move(aggs);
  json files = json::array();
  for (const auto& [path, sha] : man.files) files.push_back({{"path", path}, {"sha1", sha}});
  j["files"] = std::move(files);
  man.json = j.dump(1) + "\n";
  write_file(root / "manifest.json", man.json);
  return man;
}

}  // namespace hpen
