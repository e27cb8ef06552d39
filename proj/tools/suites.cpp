#include "suites.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include "syzflow/fibration.hpp"
#include "syzflow/flow_engine.hpp"
#include "syzflow/hyperbolicity.hpp"
#include "syzflow/isotopy.hpp"
#include "syzflow/local_models.hpp"
#include "syzflow/metrics.hpp"
#include "syzflow/picard.hpp"
#include "syzflow/report.hpp"

namespace syzflow::cli {

using nlohmann::json;

namespace {

[[noreturn]] void bad(const std::string& msg) { throw Error(ErrorKind::InvalidArgument, msg); }

CheckRecord rec(std::string anchor, json computed, json expected, double tol, bool pass, json detail = {}) {
  return CheckRecord{std::move(anchor), std::move(computed), std::move(expected), tol, pass, std::move(detail)};
}

json at_most(double x) { return {{"max", number(x)}}; }
json at_least(double x) { return {{"min", number(x)}}; }

int parse_int(const std::string& s, const std::string& what) {
  int v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) bad("bad integer in " + what + ": '" + s + "'");
  return v;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) out.push_back(item);
  if (!s.empty() && s.back() == sep) out.push_back("");
  return out;
}

std::vector<double> parse_doubles(const std::string& s, const std::string& what) {
  std::vector<double> out;
  for (const auto& item : split(s, ',')) {
    try {
      size_t used = 0;
      double v = std::stod(item, &used);
      if (used != item.size()) throw std::invalid_argument(item);
      out.push_back(v);
    } catch (const std::exception&) {
      bad("bad number in " + what + ": '" + item + "'");
    }
  }
  return out;
}

json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) bad("cannot read " + path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    bad(path + ": " + e.what());
  }
}

LocusFamily parse_family(const std::string& s) {
  if (s == "tilde") return LocusFamily::Tilde;
  if (s == "graph") return LocusFamily::Graph;
  bad("family must be tilde or graph, got '" + s + "'");
}

// ---------------------------------------------------------------- flow

MetricField parse_metric(const std::string& spec, int nvars) {
  if (spec == "flat") return flat_metric();
  if (spec == "fs") return fubini_study_metric();
  if (spec.rfind("toroidal:", 0) == 0) {
    // toroidal:L1,L2,.../A/EPS
    auto parts = split(spec.substr(9), '/');
    if (parts.size() != 3) bad("toroidal metric is toroidal:l1,l2,.../a/eps");
    auto lam = parse_doubles(parts[0], "--metric");
    const double a = parse_doubles(parts[1], "--metric").at(0), eps = parse_doubles(parts[2], "--metric").at(0);
    if (static_cast<int>(lam.size()) != nvars) bad("toroidal metric needs one lambda per variable");
    const size_t n = lam.size();
    ToroidalMetric tm(ToroidalParams{lam, std::vector<double>(n, a), std::vector<double>(n, eps)});
    return tm.as_metric_field(flat_metric());
  }
  bad("metric must be flat, fs or toroidal:..., got '" + spec + "'");
}

// z0 real in [0.5, 1.5], one of z1, z2 zero: X_0 with Im s = 0.
std::vector<AffinePoint> example_seeds(int count, unsigned long long seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u0(0.5, 1.5), r(0.3, 1.2), ph(0.0, 2 * M_PI);
  std::vector<AffinePoint> out;
  for (int k = 0; k < count; ++k) {
    const double z0 = u0(rng);
    const cplx w = std::polar(r(rng), ph(rng));
    out.push_back(k % 2 ? affine({z0, 0.0, w}) : affine({z0, w, 0.0}));
  }
  return out;
}

double rel(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

}  // namespace

json flow_suite(const FlowArgs& a) {
  MeromorphicPencil pencil = example31_pencil();
  bool example = true;
  if (!a.pencil_file.empty()) {
    try {
      pencil = read_json(a.pencil_file).get<MeromorphicPencil>();
    } catch (const json::exception& e) {
      bad(a.pencil_file + ": " + e.what());
    }
    example = json(pencil) == json(example31_pencil());
  }
  MetricField metric = parse_metric(a.metric, pencil.nvars());
  std::vector<AffinePoint> seeds;
  if (!a.seeds_file.empty()) {
    json js = read_json(a.seeds_file);
    if (js.is_object()) js = js.at("seeds");
    for (const auto& p : js) seeds.push_back(point_from_json(p));
  } else {
    if (!example) bad("--seeds is required with a custom --pencil");
    if (a.seeds < 1) bad("need at least one seed");
    seeds = example_seeds(a.seeds, a.seed);
  }
  if (!(a.tol > 0)) bad("--tol must be positive");

  FlowOptions o;
  o.abs_tol = o.rel_tol = a.tol;
  o.keep_samples = a.keep_samples;
  auto res = flow_level_set(pencil, metric, seeds, a.target, o);

  double level = 0.0, im = 0.0, push = 0.0;
  json trajs = json::array();
  for (size_t k = 0; k < res.trajectories.size(); ++k) {
    const auto& tr = res.trajectories[k];
    level = std::max(level, std::abs(eval_s(pencil, tr.end).value - a.target));
    im = std::max(im, tr.max_im_drift);
    push = std::max({push, tr.max_ds_residual, tr.max_secant_residual});
    json t = trajectory_to_json(tr);
    t["seed_index"] = k;
    trajs.push_back(std::move(t));
  }
  std::vector<CheckRecord> records;
  records.push_back(rec("flow.level_reached", number(level), at_most(1e-10), 1e-10, level <= 1e-10));
  records.push_back(rec("flow.im_s_conserved", number(im), at_most(1e-10), 1e-10, im <= 1e-10));
  records.push_back(rec("flow.pushforward_unit_rate", number(push), at_most(1e-8), 1e-8, push <= 1e-8));

  if (example && a.metric == "flat") {
    double d1 = 0.0, d2 = 0.0;
    for (size_t k = 0; k < seeds.size(); ++k) {
      auto p0 = phi_pair(seeds[k].coords, 0.0);
      auto p1 = phi_pair(res.endpoints[k].coords, a.target);
      d1 = std::max(d1, rel(p1.first, p0.first));
      d2 = std::max(d2, rel(p1.second, p0.second));
    }
    records.push_back(rec("flow.example_phi1_conserved", number(d1), at_most(1e-6), 1e-6, d1 <= 1e-6));
    records.push_back(rec("flow.example_phi2_conserved", number(d2), at_most(1e-6), 1e-6, d2 <= 1e-6));

    // Unprojected phi1 drift: against the tolerance ladder, and against a fixed step.
    auto phi1 = [](const CVec& z) { return std::norm(z(1)) - std::norm(z(2)); };
    json ladders = json::array();
    bool shrinks = true;
    for (size_t k = 0; k < std::min<size_t>(4, seeds.size()); ++k) {
      std::vector<double> ladder;
      for (double tol : {1e-6, 1e-8, 1e-10}) {
        FlowOptions lo;
        lo.abs_tol = lo.rel_tol = tol;
        lo.project = false;
        lo.keep_samples = false;
        ladder.push_back(std::abs(phi1(integrate(pencil, metric, seeds[k], a.target, lo).end.coords) -
                                  phi1(seeds[k].coords)));
      }
      shrinks = shrinks && ladder[1] < 0.1 * ladder[0] && ladder[2] < 0.1 * ladder[1];
      ladders.push_back(ladder);
    }
    std::vector<double> hs{0.1, 0.05, 0.025}, drift;
    for (double h : hs) {
      FlowOptions fo;
      fo.fixed_dt = h;
      fo.project = false;
      fo.keep_samples = false;
      drift.push_back(std::abs(phi1(integrate(pencil, metric, seeds[0], a.target, fo).end.coords) -
                               phi1(seeds[0].coords)));
    }
    const double slope = std::log(drift[0] / drift[2]) / std::log(hs[0] / hs[2]);
    records.push_back(rec("flow.drift_integrator_order", {{"fixed_step_slope", number(slope)}, {"tolerance_ladder", ladders}},
                          {{"fixed_step_slope_min", 4.0}, {"ladder", "shrinks >10x per 100x tolerance"}}, 0.0,
                          slope > 4.0 && shrinks, {{"fixed_step_drift", drift}, {"steps", hs}, {"ladder_tols", {1e-6, 1e-8, 1e-10}}}));
  }

  json cfg{{"pencil", a.pencil_file.empty() ? "example" : a.pencil_file},
           {"metric", a.metric},
           {"seeds", a.seeds_file.empty() ? json(a.seeds) : json(a.seeds_file)},
           {"target", a.target},
           {"tol", a.tol},
           {"seed", a.seed}};
  json out = suite_report("flow", cfg, records);
  out["trajectories"] = std::move(trajs);
  return out;
}

// ---------------------------------------------------------------- loci

namespace {

void draw_loci(Svg& svg, LocusFamily fam, double rmax) {
  const int n = 400;
  if (fam == LocusFamily::Tilde) {
    std::vector<std::array<double, 2>> lo, up1, up2;
    for (int i = 0; i <= n; ++i) {
      const double r = rmax * i / n, a = std::pow(r, 5);
      if (r <= 1) lo.push_back({r, std::pow(1 - a, 0.2)});
      const double u = std::pow(1 + a, 0.2);
      if (u <= rmax) {
        up1.push_back({r, u});
        up2.push_back({u, r});
      }
    }
    svg.polyline(lo, "#c0392b", 1.5);
    svg.polyline(up1, "#c0392b", 1.5);
    svg.polyline(up2, "#c0392b", 1.5);
  } else {
    svg.polyline({{1, 0}, {1, 1}}, "#2c3e50", 1.5);
    svg.polyline({{0, 1}, {1, 1}}, "#2c3e50", 1.5);
    svg.polyline({{1, 1}, {rmax, rmax}}, "#2c3e50", 1.5);
  }
}

const char* colour(Stratum s) {
  switch (s) {
    case Stratum::Tilde2: return "#f5b7b1";
    case Stratum::Tilde1: return "#c0392b";
    case Stratum::Tilde0: return "#000000";
    case Stratum::Graph1: return "#2c3e50";
    case Stratum::Graph2: return "#8e44ad";
    case Stratum::Graph3: return "#e67e22";
    default: return "#ffffff";
  }
}

std::array<int, 3> parse_triangle(const std::string& t) {
  if (t.size() != 3) bad("--triangle takes three distinct digits from 1..5");
  std::array<int, 3> out{};
  for (int k = 0; k < 3; ++k) {
    out[k] = t[k] - '0';
    if (out[k] < 1 || out[k] > 5) bad("--triangle takes three distinct digits from 1..5");
  }
  if (out[0] == out[1] || out[0] == out[2] || out[1] == out[2]) bad("--triangle digits must differ");
  return out;
}

int expected_euler(Stratum s) {
  switch (s) {
    case Stratum::Graph1: return 0;
    case Stratum::Graph2: return 5;
    case Stratum::Graph3: return -25;
    default: return 0;
  }
}

}  // namespace

json locus_suite(const LocusArgs& a) {
  const LocusFamily fam = parse_family(a.family);
  const auto tri = parse_triangle(a.triangle);
  if (a.grid < 2) bad("--grid must be >= 2");
  if (!(a.rmax > 1)) bad("--rmax must exceed 1");
  auto cells = locus_grid(fam, a.grid, a.rmax, a.tol);
  const size_t n = static_cast<size_t>(a.grid + 1);

  std::map<std::string, int> counts;
  int asym = 0, mismatches = 0, checked = 0;
  std::map<Stratum, int> euler_seen;
  std::vector<std::vector<std::string>> rows;
  const int stride = std::max(1, a.grid / 100);
  Svg svg(600, 600, 0, 0, a.rmax, a.rmax);
  std::map<Stratum, std::vector<std::array<double, 2>>> pts;
  for (size_t i = 0; i < n; ++i)
    for (size_t j = 0; j < n; ++j) {
      const auto& c = cells[i * n + j];
      ++counts[to_string(c.tag)];
      if (cells[j * n + i].tag != c.tag) ++asym;
      const double s = 1 + c.r1 + c.r2;
      char w[3][32];
      for (int k = 0; k < 3; ++k) std::snprintf(w[k], sizeof w[k], "%.12g", (k == 0 ? 1.0 : k == 1 ? c.r1 : c.r2) / s);
      char r1[32], r2[32];
      std::snprintf(r1, sizeof r1, "%.12g", c.r1);
      std::snprintf(r2, sizeof r2, "%.12g", c.r2);
      rows.push_back({r1, r2, to_string(c.tag), w[0], w[1], w[2]});
      if (c.tag == Stratum::Generic) continue;
      const bool dense = c.tag == Stratum::Tilde2;
      if (!dense || (i % stride == 0 && j % stride == 0)) pts[c.tag].push_back({c.r1, c.r2});
      // Fiber consistency on a thinned set of cells.
      if (dense && (i % stride || j % stride)) continue;
      if (c.tag == Stratum::Tilde0) continue;
      ++checked;
      if (fam == LocusFamily::Tilde) {
        const int want = c.tag == Stratum::Tilde2 ? 50 : 25;
        if (sigma_fiber_count(c.r1, c.r2, a.tol) != want) ++mismatches;
      } else {
        if (!euler_seen.count(c.tag)) euler_seen[c.tag] = fiber_type(c.r1, c.r2, fam, a.tol).euler;
        if (c.tag == Stratum::Graph1) {
          // The type I census depends on the leg coordinate; recount each cell.
          if (fiber_type(c.r1, c.r2, fam, a.tol).euler != 0) ++mismatches;
        } else if (euler_seen[c.tag] != expected_euler(c.tag)) {
          ++mismatches;
        }
      }
    }
  for (auto& [tag, p] : pts) svg.dots(p, colour(tag), tag == Stratum::Tilde2 ? 1.5 : 1.0);
  draw_loci(svg, fam, a.rmax);
  svg.text(0.05 * a.rmax, 0.95 * a.rmax,
           std::string("triangle ") + a.triangle + " (" + a.family + "), axes r" + a.triangle[1] + "/r" +
               a.triangle[0] + ", r" + a.triangle[2] + "/r" + a.triangle[0]);

  int nongeneric = 0;
  for (auto& [k, v] : counts)
    if (k != "generic") nongeneric += v;
  std::vector<CheckRecord> records;
  records.push_back(rec("fibration.locus_nonempty", nongeneric, at_least(1), 0, nongeneric > 0, counts));
  records.push_back(rec("fibration.locus_swap_symmetric", asym, 0, 0, asym == 0));
  records.push_back(rec("fibration.locus_fiber_consistency", mismatches, 0, 0, mismatches == 0,
                        {{"cells_checked", checked}}));

  const std::string i = std::to_string(tri[0]), j = std::to_string(tri[1]), k = std::to_string(tri[2]);
  json cfg{{"family", a.family}, {"triangle", a.triangle}, {"grid", a.grid}, {"rmax", a.rmax}, {"tol", a.tol}};
  json out = suite_report("locus", cfg, records);
  out["svg"] = svg.str();
  out["csv"] = csv({"r" + j + "/r" + i, "r" + k + "/r" + i, "stratum", "w" + i, "w" + j, "w" + k}, rows);
  return out;
}

namespace {

const char* fiber_id(FiberType t) {
  switch (t) {
    case FiberType::T3: return "smooth";
    case FiberType::Collapse50: return "tilde2";
    case FiberType::Collapse25: return "tilde1";
    case FiberType::Collapse5Tori: return "tilde0";
    case FiberType::I5: return "type_I";
    case FiberType::II5x5: return "type_II";
    case FiberType::III5: return "type_III";
  }
  return "unknown";
}

}  // namespace

json fiber_suite(const FiberArgs& a) {
  const LocusFamily fam = parse_family(a.family);
  if (a.base.size() != 2) bad("--base takes r1,r2");
  const double r1 = a.base[0], r2 = a.base[1];
  if (!(r1 >= 0) || !(r2 >= 0)) bad("--base radii must be >= 0");
  FiberModel f = fiber_type(r1, r2, fam);
  int want = 0;
  json census_want;
  switch (f.type) {
    case FiberType::T3: want = 0; break;
    case FiberType::Collapse50: want = 50; break;
    case FiberType::Collapse25: want = 25; break;
    case FiberType::Collapse5Tori: want = 5; break;
    case FiberType::I5: want = 0; break;
    case FiberType::II5x5:
      want = -25;
      census_want = {{"vertices", 50}, {"edges", 75}};
      break;
    case FiberType::III5: want = 5; break;
  }
  std::vector<CheckRecord> records;
  const bool census_ok = census_want.is_null() ||
                         (f.census.vertices == census_want["vertices"] && f.census.edges == census_want["edges"]);
  json expected{{"euler", want}};
  if (!census_want.is_null()) expected["census"] = census_want;
  records.push_back(rec(std::string("fibration.fiber_") + fiber_id(f.type), fiber_to_json(f), expected, 0,
                        f.euler == want && census_ok));
  if (fam == LocusFamily::Tilde && (f.type == FiberType::Collapse50 || f.type == FiberType::Collapse25)) {
    const int cnt = sigma_fiber_count(r1, r2);
    records.push_back(rec("fibration.sigma_count", cnt, want, 0, cnt == want));
  }
  json cfg{{"base", a.base}, {"family", a.family}};
  json out = suite_report("fiber", cfg, records);
  out["fiber"] = fiber_to_json(f);
  return out;
}

// ---------------------------------------------------------------- isotopy

namespace {

CurvePoint triple_point(int k) {
  const cplx x1 = std::polar(1.0, (2 * M_PI / 3 + 2 * M_PI * k) / 5);
  const cplx x2 = std::polar(1.0, (-2 * M_PI / 3 + 2 * M_PI * (k + 2)) / 5);
  return curve_point(x1, x2);
}

// Largest two of (1, |y1|, |y2|) in moment coordinates.
double graph_gap(cplx y1, cplx y2) {
  std::array<double, 3> w{1.0, std::abs(y1), std::abs(y2)};
  std::sort(w.begin(), w.end());
  return (w[2] - w[1]) / (w[0] + w[1] + w[2]);
}

}  // namespace

json isotopy_suite(const IsotopyArgs& a) {
  IsotopyVariant v;
  if (a.variant == "piecewise") v = IsotopyVariant::Piecewise;
  else if (a.variant == "smooth") v = IsotopyVariant::Smooth;
  else bad("--variant must be piecewise or smooth");
  if (a.t_grid.empty()) bad("--t-grid is empty");
  for (double t : a.t_grid)
    if (!(t >= 0 && t <= 1)) bad("--t-grid values must lie in [0, 1]");
  if (!(a.eps > 0 && a.eps < 0.5)) bad("--eps must lie in (0, 0.5)");

  IsotopyConfig cfg;
  cfg.variant = v;
  cfg.eps = a.eps;
  SweepOptions so;
  so.samples = a.samples;
  so.t_grid = a.t_grid;
  so.seed = a.seed;
  auto sweep = positivity_sweep(cfg, so);

  std::vector<CheckRecord> records;
  const double bound = 1.0 / 9.0;
  json region_min = json::array();
  for (double m : sweep.region_min) region_min.push_back(number(m));
  records.push_back(rec(std::string("isotopy.") + to_string(v) + "_ratio_bound", number(sweep.min_ratio),
                        at_least(bound), 1e-9, sweep.min_ratio >= bound - 1e-9,
                        {{"region_min", region_min}, {"evaluations", sweep.evaluations}}));
  records.push_back(rec("isotopy.closed_form_vs_pullback", number(sweep.max_formula_gap), at_most(1e-6), 1e-6,
                        sweep.max_formula_gap <= 1e-6));

  auto pts = sample_curve(a.samples, a.eps, a.seed + 1);
  if (v == IsotopyVariant::Piecewise) {
    IsotopyConfig c1 = cfg, c0 = cfg;
    c1.t = 1.0;
    double gap = 0.0;
    int off_graph = 0, off_tilde = 0;
    for (const auto& p : pts) {
      auto [y1, y2] = deform_point(p, c1);
      gap = std::max(gap, graph_gap(y1, y2));
      if (classify(moment_map(affine({1.0, y1, y2})), LocusFamily::Graph, 1e-9).tag == Stratum::Generic) ++off_graph;
      auto [x1, x2] = deform_point(p, c0);
      if (classify(moment_map(affine({1.0, x1, x2})), LocusFamily::Tilde, 1e-9).tag == Stratum::Generic) ++off_tilde;
    }
    records.push_back(rec("isotopy.graph_image_at_one", {{"max_gap", number(gap)}, {"off_graph", off_graph}},
                          {{"max_gap", 1e-9}, {"off_graph", 0}}, 1e-9, gap <= 1e-9 && off_graph == 0));
    records.push_back(rec("isotopy.tilde_image_at_zero", off_tilde, 0, 1e-9, off_tilde == 0));

    json areas = json::array();
    double worst = 0.0, tmin = INFINITY, tmax = -INFINITY;
    for (double t : a.t_grid) {
      auto ar = region_areas(t);
      worst = std::max(worst, ar.max_rel_dev);
      tmin = std::min(tmin, ar.total);
      tmax = std::max(tmax, ar.total);
      areas.push_back({{"t", t}, {"areas", ar.areas}, {"total", ar.total}});
    }
    const double spread = (tmax - tmin) / tmax;
    records.push_back(rec("isotopy.equal_region_areas", {{"max_rel_dev", number(worst)}, {"total_spread", number(spread)}},
                          {{"max_rel_dev", 1e-3}, {"total_spread", 1e-3}}, 1e-3, worst <= 1e-3 && spread <= 1e-3,
                          areas));
  } else {
    double worst = 0.0;
    for (int i = 0; i <= 10; ++i) {
      IsotopyConfig c = cfg;
      c.t = i / 10.0;
      for (int k = 0; k < 5; ++k) worst = std::max(worst, std::abs(symplectic_ratio(triple_point(k), c) - (2 - c.t) / 6));
    }
    records.push_back(rec("isotopy.smooth_triple_point_value", number(worst), at_most(1e-9), 1e-9, worst <= 1e-9,
                          {{"formula", "(2-t)/6"}, {"t_points", 11}}));

    // Stratum r1 = r2 <= 1 - eps of the canonical chart (nonempty from 2^{-1/5}).
    const double lo = std::pow(0.5, 0.2), hi = 1 - a.eps;
    double smin = INFINITY;
    int count = 0;
    for (int i = 0; i <= 40 && lo <= hi; ++i) {
      const double r = lo + (hi - lo) * i / 40;
      for (auto [p1, p2] : sigma_fiber_phases(r, r)) {
        auto p = curve_point(std::polar(r, p1), std::polar(r, p2));
        for (double t : a.t_grid) {
          IsotopyConfig c = cfg;
          c.t = t;
          smin = std::min(smin, canonical_ratio(p, c));
          ++count;
        }
      }
    }
    records.push_back(rec("isotopy.smooth_diagonal_stratum", number(smin), at_least(1.0 / 6.0), 1e-9,
                          smin >= 1.0 / 6.0 - 1e-9, {{"evaluations", count}}));
    auto band = smooth_band(a.eps, a.t_grid, 4000, a.seed);
    records.push_back(rec("isotopy.smooth_band_degradation", {{"C", number(band.degradation)}, {"min_ratio", number(band.min_ratio)}},
                          {{"C", "reported"}, {"min_ratio", at_least(bound)}}, 0.0,
                          std::isfinite(band.degradation) && band.min_ratio >= bound - 1e-9,
                          {{"eps", a.eps}, {"samples", band.samples}, {"sweep_C", number(sweep.degradation)}}));
  }

  // Moment-map image at the last t, drawn over both loci in the (r1, r2) quadrant.
  const double rmax = 2.0;
  Svg svg(600, 600, 0, 0, rmax, rmax);
  IsotopyConfig cl = cfg;
  cl.t = a.t_grid.back();
  std::vector<std::array<double, 2>> img;
  for (size_t k = 0; k < pts.size(); k += std::max<size_t>(1, pts.size() / 3000)) {
    auto [y1, y2] = deform_point(pts[k], cl);
    if (std::abs(y1) <= rmax && std::abs(y2) <= rmax) img.push_back({std::abs(y1), std::abs(y2)});
  }
  svg.dots(img, "#2980b9", 1.0);
  draw_loci(svg, LocusFamily::Tilde, rmax);
  draw_loci(svg, LocusFamily::Graph, rmax);
  char label[64];
  std::snprintf(label, sizeof label, "%s, t = %.3g", to_string(v), cl.t);
  svg.text(0.05 * rmax, 0.95 * rmax, label);

  json cfgj{{"variant", a.variant}, {"eps", a.eps}, {"t_grid", a.t_grid}, {"samples", a.samples}, {"seed", a.seed}};
  json out = suite_report("isotopy-check", cfgj, records);
  out["positivity"] = positivity_to_json(sweep);
  out["svg"] = svg.str();
  return out;
}

// ---------------------------------------------------------------- metric

namespace {

// d^2R/dz_j dzbar_k by central differences with one Richardson step.
CMat fd_ddbar(const ToroidalMetric& tm, const CVec& z, double h) {
  const int n = static_cast<int>(z.size());
  auto dir = [&](int a) {
    CVec e = CVec::Zero(n);
    e(a % n) = a < n ? cplx(1, 0) : cplx(0, 1);
    return e;
  };
  auto hess = [&](double s) {
    Eigen::MatrixXd H(2 * n, 2 * n);
    const double R0 = tm.potential(z);
    for (int a = 0; a < 2 * n; ++a)
      for (int b = a; b < 2 * n; ++b) {
        double v;
        if (a == b)
          v = (tm.potential(z + s * dir(a)) - 2 * R0 + tm.potential(z - s * dir(a))) / (s * s);
        else
          v = (tm.potential(z + s * dir(a) + s * dir(b)) - tm.potential(z + s * dir(a) - s * dir(b)) -
               tm.potential(z - s * dir(a) + s * dir(b)) + tm.potential(z - s * dir(a) - s * dir(b))) /
              (4 * s * s);
        H(a, b) = H(b, a) = v;
      }
    return H;
  };
  Eigen::MatrixXd H = (4.0 * hess(h / 2) - hess(h)) / 3.0;
  CMat M(n, n);
  for (int j = 0; j < n; ++j)
    for (int k = 0; k < n; ++k) M(j, k) = 0.25 * cplx(H(j, k) + H(j + n, k + n), H(j, k + n) - H(j + n, k));
  return M;
}

}  // namespace

json metric_suite(const MetricArgs& a) {
  if (a.lambdas.empty()) bad("--lambdas is empty");
  for (double l : a.lambdas)
    if (!(l > 0)) bad("--lambdas must be positive");
  if (!(a.a > 0) || !(a.eps > 0)) bad("--a and --eps must be positive");
  if (a.grid < 1) bad("--grid must be >= 1");
  const size_t n = a.lambdas.size();
  ToroidalMetric tm(ToroidalParams{a.lambdas, std::vector<double>(n, a.a), std::vector<double>(n, a.eps)});
  CertifyGrid g;
  g.transition_samples = a.grid;
  g.threshold = a.threshold;
  g.seed = a.seed;
  auto rep = certify_toroidal(tm, g);

  std::mt19937_64 rng(a.seed + 17);
  std::uniform_real_distribution<double> U(std::log(tm.R1() / 2), std::log(tm.R2()));
  double fd = 0.0;
  for (int k = 0; k < 40; ++k) {
    std::vector<double> radii(n);
    for (auto& r : radii) r = std::exp(U(rng));
    CVec z = torus_point(radii, rng);
    fd = std::max(fd, (tm.ddbar(z) - fd_ddbar(tm, z, 1e-4)).cwiseAbs().maxCoeff());
  }

  std::vector<CheckRecord> records;
  records.push_back(rec("metrics.inner_equals_diag_lambda", number(rep.inner_residual), at_most(1e-12), 1e-12,
                        rep.inner_residual <= 1e-12, {{"R1", rep.R1}}));
  records.push_back(rec("metrics.outer_equals_base", number(rep.outer_residual), at_most(1e-12), 1e-12,
                        rep.outer_residual <= 1e-12,
                        {{"R2", rep.R2}, {"R2_quoted", rep.R2_quoted}, {"residual_at_quoted", number(rep.outer_residual_quoted)}}));
  records.push_back(rec("metrics.transition_min_eigenvalue", number(rep.min_eigenvalue), at_least(a.threshold), 0.0,
                        rep.min_eigenvalue >= a.threshold,
                        {{"samples", a.grid}, {"measured_C", number(rep.measured_C)}}));
  records.push_back(rec("metrics.hermitian", number(rep.hermitian_residual), at_most(1e-12), 1e-12,
                        rep.hermitian_residual <= 1e-12));
  records.push_back(rec("metrics.ddbar_closed_form_vs_fd", number(fd), at_most(1e-6), 1e-6, fd <= 1e-6));
  json cfg{{"lambdas", a.lambdas}, {"a", a.a}, {"eps", a.eps}, {"grid", a.grid}, {"threshold", a.threshold},
           {"seed", a.seed}};
  return suite_report("metric-check", cfg, records);
}

// ---------------------------------------------------------------- local models

namespace {

struct ParsedModel {
  enum Kind { Example, Monomial, I, II } kind = Example;
  ModelSpec spec;
  int n = 0;
};

ParsedModel parse_model(const std::string& s) {
  ParsedModel m;
  if (s == "3.1") return m;
  auto colon = s.find(':');
  if (colon == std::string::npos) bad("--model must be 3.1, 3.2:m,n,l, I:n or II:n");
  const std::string head = s.substr(0, colon), tail = s.substr(colon + 1);
  if (head == "3.2") {
    auto parts = split(tail, ',');
    if (parts.size() != 3) bad("--model 3.2 takes m,n,l");
    m.kind = ParsedModel::Monomial;
    m.spec = {parse_int(parts[0], "--model"), parse_int(parts[1], "--model"), parse_int(parts[2], "--model")};
    validate(m.spec);
    return m;
  }
  if (head == "I" || head == "II") {
    m.kind = head == "I" ? ParsedModel::I : ParsedModel::II;
    m.n = parse_int(tail, "--model");
    if (m.n < (m.kind == ParsedModel::I ? 1 : 2) || m.n > 8) bad("--model " + head + ": n out of range");
    return m;
  }
  bad("--model must be 3.1, 3.2:m,n,l, I:n or II:n");
}

SingularODEProblem default_problem() {
  SingularODEProblem p;
  p.kind = SingularODEProblem::Kind::Matrix;
  p.m = 2;
  p.n = 1;
  p.H = [](const RVec& th) {
    RMat H(2, 2);
    H << 1.0 + 0.1 * th(0), 0.1 * th(2), -0.1 * th(2), 2.0 + 0.1 * th(1);
    return H;
  };
  p.h1 = [](double r, const RVec& th) {
    RVec v(2);
    v << std::cos(r + th(0)), std::cos(r + th(1));
    return v;
  };
  p.h2 = [](double r, const RVec& th) {
    RVec v(1);
    v << std::cos(r + th(0) + th(2));
    return v;
  };
  p.r0 = 0.5;
  p.beta0 = RVec::Constant(1, 0.3);
  return p;
}

FlowOptions tight() {
  FlowOptions o;
  o.abs_tol = o.rel_tol = 1e-12;
  o.keep_samples = false;
  return o;
}

CheckRecord invariants_record(const ParsedModel& m, unsigned long long seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.6, 1.4), ph(0, 2 * M_PI);
  double worst = 0.0;
  if (m.kind == ParsedModel::Example) {
    auto pencil = example31_pencil();
    auto seeds = example_seeds(20, seed);
    auto res = flow_level_set(pencil, flat_metric(), seeds, 0.5, tight());
    for (size_t k = 0; k < seeds.size(); ++k) {
      auto a = phi_pair(seeds[k].coords, 0.0), b = phi_pair(res.endpoints[k].coords, 0.5);
      worst = std::max({worst, rel(b.first, a.first), rel(b.second, a.second)});
    }
    return rec("local_models.example_phi_pair_conserved", number(worst), at_most(1e-6), 1e-6, worst <= 1e-6);
  }
  if (m.kind == ParsedModel::Monomial) {
    auto pencil = model_pencil(m.spec);
    const int N = m.spec.nvars();
    double halved = INFINITY;
    for (int k = 0; k < 10; ++k) {
      CVec z(N);
      for (int i = 0; i < N; ++i) z(i) = std::polar(u(rng), ph(rng));
      const double t0 = eval_s(pencil, affine(z)).value.real();
      FlowOptions o = tight();
      o.keep_samples = true;
      auto tr = integrate(pencil, flat_metric(), affine(z), t0 + (k % 2 ? 0.3 : -0.3), o);
      auto a = invariants_of_model(m.spec, z), b = invariants_of_model(m.spec, tr.end.coords);
      for (size_t i = 0; i < a.size(); ++i)
        worst = std::max(worst, std::abs(a[i].value - b[i].value) / (1 + std::abs(a[i].value)));
      if (m.spec.n > 0) {
        auto cross_max = [&](const CVec& w) {
          double mx = 0.0;
          for (auto& p : invariants_of_model(m.spec, w))
            if (p.cross) mx = std::max(mx, p.value);
          return mx;
        };
        const double c0 = cross_max(z);
        for (const auto& s : tr.samples) halved = std::min(halved, cross_max(s.point.coords) / c0);
      }
    }
    const bool cross_ok = m.spec.n == 0 || halved > 0.5;
    return rec("local_models.monomial_invariants_conserved", number(worst), at_most(1e-6), 1e-6,
               worst <= 1e-6 && cross_ok, {{"min_cross_ratio", number(halved)}});
  }
  // Models I and II: extended coordinates on a real level.
  const bool one = m.kind == ParsedModel::I;
  const int N = one ? m.n + 1 : m.n;
  std::vector<int> ep(N, 1), eq(N, 0);
  if (one) {
    ep[0] = 0;
    eq[0] = 1;
  }
  auto pencil = make_pencil(Polynomial::monomial(N, ep), one ? Polynomial::monomial(N, eq) : Polynomial::constant(N, 1.0),
                            false);
  for (int k = 0; k < 10; ++k) {
    CVec z(N);
    for (int i = 0; i < N; ++i) z(i) = std::polar(u(rng), ph(rng));
    // Rotate the last coordinate so that s is real and positive.
    const cplx s = eval_s(pencil, affine(z)).value;
    z(N - 1) *= std::polar(1.0, -std::arg(s));
    const double t0 = eval_s(pencil, affine(z)).value.real();
    auto tr = integrate(pencil, flat_metric(), affine(z), t0 + 0.3, tight());
    const LocalModel lm = one ? LocalModel::I : LocalModel::II;
    worst = std::max(worst, (extended_coordinates(lm, tr.end.coords) - extended_coordinates(lm, z)).norm());
  }
  return rec(std::string("local_models.model_") + (one ? "I" : "II") + "_extended_coordinates_conserved",
             number(worst), at_most(1e-6), 1e-6, worst <= 1e-6);
}

}  // namespace

json local_model_suite(const LocalModelArgs& a) {
  const ParsedModel m = parse_model(a.model);
  const std::vector<std::string> all{"invariants", "phi", "lipschitz", "picard"};
  if (a.probe != "all" && std::find(all.begin(), all.end(), a.probe) == all.end())
    bad("--probe must be invariants, phi, lipschitz, picard or all");
  const bool example = m.kind == ParsedModel::Example;
  if (!example && (a.probe == "phi" || a.probe == "lipschitz")) bad("--probe " + a.probe + " needs --model 3.1");
  auto want = [&](const std::string& p) { return a.probe == p || a.probe == "all"; };

  std::vector<CheckRecord> records;
  if (want("invariants")) records.push_back(invariants_record(m, a.seed));
  if (want("phi") && example) {
    // Both branches of phi2 meet on r2 = r3.
    double gap = 0.0;
    for (double th : {0.0, 0.7, 2.0})
      for (double r : {0.6, 1.0, 1.7}) {
        const double c = 1.0, d = 1e-9;
        auto lo = phi_pair(xc_point(c, r, th, std::sqrt(c * r) * (1 - d), 0.4), c);
        auto hi = phi_pair(xc_point(c, r, th, std::sqrt(c * r) * (1 + d), 0.4), c);
        gap = std::max(gap, std::abs(lo.second - hi.second));
      }
    records.push_back(rec("local_models.phi2_seam_continuity", number(gap), at_most(1e-7), 1e-7, gap <= 1e-7,
                          {{"offset", 1e-9}}));
  }
  if (want("lipschitz") && example) {
    auto kink = lipschitz_probe(1.0, 1.0, M_PI / 2);
    auto flat = lipschitz_probe(1.0, 1.0, 0.0);
    json lv = json::array();
    for (const auto& l : kink.levels)
      lv.push_back({{"h", l.h}, {"value_gap", number(l.value_gap)}, {"derivative_gap", number(l.derivative_gap)}});
    records.push_back(rec("local_models.lipschitz_kink_off_real_locus",
                          {{"min_derivative_gap", number(kink.min_derivative_gap)}, {"value_gap_order", number(kink.value_gap_order)}},
                          {{"min_derivative_gap", 1e-2}, {"value_gap_order", 1.0}}, 0.1, kink.pass, lv));
    const double g = flat.levels.back().derivative_gap;
    records.push_back(rec("local_models.lipschitz_smooth_on_real_locus", number(g), at_most(1e-6), 1e-6,
                          flat.continuous && g <= 1e-6));
  }
  if (want("picard")) {
    auto p = default_problem();
    auto sol = picard_solve(p);
    auto Tv = picard_operator(p, sol.r0, sol.values, static_cast<int>(sol.nodes.size()));
    double fp = 0.0;
    for (size_t k = 0; k < Tv.size(); ++k) fp = std::max(fp, (Tv[k] - sol.values[k]).norm());
    const double slope = (sol.slope0 - sol.predicted_slope).norm();
    records.push_back(rec("local_models.picard_contraction", number(sol.contraction), at_most(0.5), 0.0,
                          sol.contraction <= 0.5, {{"r0", sol.r0}, {"M", sol.M}, {"fixed_point_residual", number(fp)}}));
    records.push_back(rec("local_models.picard_initial_slope", number(slope), at_most(1e-8), 1e-8, slope <= 1e-8));
    json probes = json::array();
    bool all_div = true;
    for (double off : {1e-2, 1e-4}) {
      auto pr = no_extra_solutions_probe(p, sol, off);
      all_div = all_div && pr.diverged;
      probes.push_back({{"offset", off},
                        {"diverged", pr.diverged},
                        {"crossing_r", number(pr.crossing_r)},
                        {"epsilon", number(pr.epsilon)},
                        {"divergence_exponent", number(pr.divergence_exponent)},
                        {"expected_exponent", number(pr.expected_exponent)}});
    }
    records.push_back(rec("local_models.picard_offsets_diverge", all_div, true, 0.0, all_div, probes));
  }
  json cfg{{"model", a.model}, {"probe", a.probe}, {"seed", a.seed}};
  return suite_report("local-model-check", cfg, records);
}

// ---------------------------------------------------------------- hyperbolicity

json hyperbolicity_suite_report(const HyperbolicityArgs& a) {
  if (a.model.rfind("II:", 0) != 0) bad("--model must be II:n");
  const int n = parse_int(a.model.substr(3), "--model");
  if (n < 2 || n > 5) bad("--model II:n needs 2 <= n <= 5");
  if (a.grid < 0) bad("--grid must be >= 0");
  if (!(a.tube > 0 && a.tube < 0.5)) bad("--tube must lie in (0, 0.5)");
  HyperbolicityOptions o;
  o.grid.points = a.grid > 0 ? a.grid : (n == 2 ? 2000 : 4000);
  o.grid.seed = a.seed;
  o.tube_radius = a.tube;
  auto s = hyperbolicity_suite(n, o);
  std::vector<CheckRecord> records;
  records.push_back(rec("hyperbolicity.z_tori_hausdorff", number(s.hausdorff), at_most(1e-3), 1e-3,
                        s.hausdorff <= 1e-3 && s.plus > 0 && s.minus > 0, {{"plus", s.plus}, {"minus", s.minus}}));
  records.push_back(rec("hyperbolicity.normal_form_negative", number(s.form_max_real), {{"max_exclusive", 0.0}}, 0.0,
                        s.form_max_real < 0));
  records.push_back(rec("hyperbolicity.geometric_margin_positive", number(s.margin.margin), {{"min_exclusive", 0.0}}, 0.0,
                        s.margin.pass && s.margin.margin > 0, {{"tube", a.tube}}));
  records.push_back(rec("hyperbolicity.margin_quadratic_in_tube", number(s.scaling.slope), 2.0, 0.2,
                        std::abs(s.scaling.slope - 2.0) <= 0.2, {{"radii", s.scaling.radii}, {"margins", s.scaling.margins}}));
  records.push_back(rec("hyperbolicity.reversed_field_fails", s.reversed_fails, true, 0.0, s.reversed_fails));
  json cfg{{"model", a.model}, {"grid", o.grid.points}, {"tube", a.tube}, {"seed", a.seed}};
  json out = suite_report("hyperbolicity", cfg, records);
  out["details"] = suite_to_json(s);
  return out;
}

// ---------------------------------------------------------------- all

json verify_all(unsigned long long seed) {
  json suites = json::array();
  auto strip = [](json j) {
    j.erase("svg");
    j.erase("csv");
    j.erase("trajectories");
    return j;
  };
  FlowArgs fa;
  fa.seed = seed;
  fa.keep_samples = false;
  suites.push_back(strip(flow_suite(fa)));
  for (const char* fam : {"tilde", "graph"}) {
    LocusArgs la;
    la.family = fam;
    la.grid = 200;
    suites.push_back(strip(locus_suite(la)));
  }
  const std::vector<std::pair<std::vector<double>, std::string>> fibers{
      {{0.95, 0.95}, "tilde"}, {{std::pow(0.5, 0.2), 1.0}, "tilde"}, {{1.0, 0.5}, "graph"},
      {{1.0, 1.0}, "graph"},   {{1.0, 0.0}, "graph"}};
  for (const auto& [b, fam] : fibers) suites.push_back(fiber_suite(FiberArgs{b, fam}));
  for (const char* var : {"piecewise", "smooth"}) {
    IsotopyArgs ia;
    ia.variant = var;
    ia.seed = seed;
    suites.push_back(strip(isotopy_suite(ia)));
  }
  MetricArgs ma;
  ma.seed = seed;
  suites.push_back(metric_suite(ma));
  LocalModelArgs lm;
  lm.seed = seed;
  suites.push_back(local_model_suite(lm));
  for (const char* mdl : {"3.2:2,2,0", "I:3", "II:3"}) {
    LocalModelArgs l2;
    l2.model = mdl;
    l2.probe = "invariants";
    l2.seed = seed;
    suites.push_back(local_model_suite(l2));
  }
  for (const char* mdl : {"II:2", "II:3"}) {
    HyperbolicityArgs ha;
    ha.model = mdl;
    ha.seed = seed;
    suites.push_back(hyperbolicity_suite_report(ha));
  }
  bool pass = true;
  for (const auto& s : suites) pass = pass && s["pass"].get<bool>();
  return {{"suite", "verify-all"}, {"seed", seed}, {"suites", suites}, {"pass", pass}};
}

}  // namespace syzflow::cli
