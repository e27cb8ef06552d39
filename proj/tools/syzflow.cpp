#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "suites.hpp"
#include "syzflow/errors.hpp"
#include "syzflow/report.hpp"

using nlohmann::json;
using namespace syzflow;

namespace {

void summarize(const json& report, std::ostream& os) {
  if (report.contains("suites")) {
    for (const auto& s : report["suites"]) summarize(s, os);
    return;
  }
  for (const auto& r : report["records"])
    os << (r["pass"].get<bool>() ? "PASS " : "FAIL ") << report["suite"].get<std::string>() << " "
       << r["claim_anchor"].get<std::string>() << "\n";
}

// Report to --out (with a summary on stdout) or, without --out, to stdout.
int emit(const json& report, const std::string& out) {
  if (out.empty()) {
    std::cout << dump(report);
  } else {
    write_file(out, dump(report));
    summarize(report, std::cout);
  }
  return report["pass"].get<bool>() ? 0 : 1;
}

std::string strip_ext(std::string p) {
  for (const char* ext : {".svg", ".csv", ".json"}) {
    const std::string e = ext;
    if (p.size() > e.size() && p.compare(p.size() - e.size(), e.size(), e) == 0) return p.substr(0, p.size() - e.size());
  }
  return p;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"syzflow: flows, fibrations and isotopy checks"};
  app.require_subcommand(1);
  int status = 0;

  cli::FlowArgs fa;
  std::string flow_out;
  auto* flow = app.add_subcommand("flow", "flow seeds to a level set and check the diagnostics");
  flow->add_option("--pencil", fa.pencil_file, "pencil JSON (default: s = z1 z2 / z0)");
  flow->add_option("--metric", fa.metric, "flat | fs | toroidal:l1,l2,.../a/eps")->capture_default_str();
  flow->add_option("--seeds", fa.seeds_file, "seed points JSON (default: generated)");
  flow->add_option("--count", fa.seeds, "generated seed count")->capture_default_str();
  flow->add_option("--target", fa.target, "level c")->capture_default_str();
  flow->add_option("--tol", fa.tol, "integrator tolerance")->capture_default_str();
  flow->add_option("--seed", fa.seed, "RNG seed")->capture_default_str();
  flow->add_option("--out", flow_out, "trajectories.json");

  cli::LocusArgs la;
  std::string locus_out;
  auto* locus = app.add_subcommand("locus", "tabulate a locus over the (r1, r2) quadrant");
  locus->add_option("--family", la.family, "tilde | graph")->capture_default_str();
  locus->add_option("--triangle", la.triangle, "three of 1..5")->capture_default_str();
  locus->add_option("--grid", la.grid, "cells per axis")->capture_default_str();
  locus->add_option("--rmax", la.rmax, "quadrant extent")->capture_default_str();
  locus->add_option("--out", locus_out, "output stem; writes .svg, .csv and .json");

  cli::FiberArgs fb;
  std::string fiber_out;
  auto* fiber = app.add_subcommand("fiber", "fiber model over a base point");
  fiber->add_option("--base", fb.base, "r1,r2")->delimiter(',')->expected(2)->capture_default_str();
  fiber->add_option("--family", fb.family, "tilde | graph")->capture_default_str();
  fiber->add_option("--out", fiber_out, "census.json");

  cli::IsotopyArgs ia;
  std::string iso_out, iso_svg;
  auto* iso = app.add_subcommand("isotopy-check", "positivity of the deformed curve family");
  iso->add_option("--variant", ia.variant, "piecewise | smooth")->capture_default_str();
  iso->add_option("--eps", ia.eps, "cutoff width")->capture_default_str();
  iso->add_option("--t-grid", ia.t_grid, "comma separated t values in [0, 1]")->delimiter(',')->capture_default_str();
  iso->add_option("--samples", ia.samples, "curve samples (>= 10000)")->capture_default_str();
  iso->add_option("--seed", ia.seed, "RNG seed")->capture_default_str();
  iso->add_option("--out", iso_out, "report.json");
  iso->add_option("--svg", iso_svg, "moment image at the last t");

  cli::MetricArgs ma;
  std::string metric_out;
  auto* metric = app.add_subcommand("metric-check", "certify the toroidal metric");
  metric->add_option("--lambdas", ma.lambdas, "l1,l2,...")->delimiter(',')->capture_default_str();
  metric->add_option("--a", ma.a, "inner radius scale")->capture_default_str();
  metric->add_option("--eps", ma.eps, "cutoff derivative bound")->capture_default_str();
  metric->add_option("--grid", ma.grid, "transition samples")->capture_default_str();
  metric->add_option("--threshold", ma.threshold, "required minimum eigenvalue")->capture_default_str();
  metric->add_option("--seed", ma.seed, "RNG seed")->capture_default_str();
  metric->add_option("--out", metric_out, "report.json");

  cli::LocalModelArgs lm;
  std::string lm_out;
  auto* local = app.add_subcommand("local-model-check", "invariants, phi, Lipschitz and Picard probes");
  local->add_option("--model", lm.model, "3.1 | 3.2:m,n,l | I:n | II:n")->capture_default_str();
  local->add_option("--probe", lm.probe, "invariants | phi | lipschitz | picard | all")->capture_default_str();
  local->add_option("--seed", lm.seed, "RNG seed")->capture_default_str();
  local->add_option("--out", lm_out, "report.json");

  cli::HyperbolicityArgs ha;
  std::string hyp_out;
  auto* hyp = app.add_subcommand("hyperbolicity", "critical tori and hyperbolicity of model II");
  hyp->add_option("--model", ha.model, "II:n")->capture_default_str();
  hyp->add_option("--grid", ha.grid, "sphere samples (0: default)")->capture_default_str();
  hyp->add_option("--tube", ha.tube, "tube radius")->capture_default_str();
  hyp->add_option("--seed", ha.seed, "RNG seed")->capture_default_str();
  hyp->add_option("--out", hyp_out, "report.json");

  unsigned long long all_seed = 42;
  std::string all_out;
  auto* all = app.add_subcommand("verify-all", "run every default suite");
  all->add_option("--seed", all_seed, "RNG seed")->capture_default_str();
  all->add_option("--out", all_out, "report.json");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    std::cerr << "error: " << e.what() << "\n";
    const auto subs = app.get_subcommands();
    std::cerr << (subs.empty() ? app.help() : subs.front()->help());
    return 2;
  }

  try {
    if (*flow) {
      status = emit(cli::flow_suite(fa), flow_out);
    } else if (*locus) {
      json r = cli::locus_suite(la);
      const std::string stem =
          locus_out.empty() ? "locus_" + la.family + "_" + la.triangle : strip_ext(locus_out);
      write_file(stem + ".svg", r["svg"].get<std::string>());
      write_file(stem + ".csv", r["csv"].get<std::string>());
      r.erase("svg");
      r.erase("csv");
      r["files"] = {stem + ".svg", stem + ".csv"};
      status = emit(r, stem + ".json");
    } else if (*fiber) {
      status = emit(cli::fiber_suite(fb), fiber_out);
    } else if (*iso) {
      json r = cli::isotopy_suite(ia);
      if (!iso_svg.empty()) write_file(iso_svg, r["svg"].get<std::string>());
      r.erase("svg");
      status = emit(r, iso_out);
    } else if (*metric) {
      status = emit(cli::metric_suite(ma), metric_out);
    } else if (*local) {
      status = emit(cli::local_model_suite(lm), lm_out);
    } else if (*hyp) {
      status = emit(cli::hyperbolicity_suite_report(ha), hyp_out);
    } else if (*all) {
      status = emit(cli::verify_all(all_seed), all_out);
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    if (e.kind() == ErrorKind::InvalidArgument) {
      const auto subs = app.get_subcommands();
      if (!subs.empty()) std::cerr << subs.front()->help();
      return 2;
    }
    return 1;
  }
  return status;
}
