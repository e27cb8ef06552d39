#pragma once

#include <string>
#include <vector>

#include <json.hpp>

namespace syzflow::cli {

struct FlowArgs {
  std::string pencil_file;  // empty: the s = z1 z2 / z0 example
  std::string metric = "flat";
  std::string seeds_file;   // empty: generated seeds on {z1 z2 = 0}
  int seeds = 100;
  double target = 0.5;
  double tol = 1e-11;
  unsigned long long seed = 42;
  bool keep_samples = true;
};

struct LocusArgs {
  std::string family = "tilde";
  std::string triangle = "123";
  int grid = 400;
  double rmax = 2.0;
  double tol = 1e-9;
};

struct FiberArgs {
  std::vector<double> base{0.9, 0.9};
  std::string family = "tilde";
};

struct IsotopyArgs {
  std::string variant = "piecewise";
  double eps = 0.05;
  std::vector<double> t_grid{0.0, 0.25, 0.5, 0.75, 1.0};
  int samples = 10000;
  unsigned long long seed = 7;
};

struct MetricArgs {
  std::vector<double> lambdas{2.0, 0.5};
  double a = 0.1;
  double eps = 0.01;
  int grid = 10000;
  double threshold = 0.4;
  unsigned long long seed = 1;
};

struct LocalModelArgs {
  std::string model = "3.1";
  std::string probe = "all";
  unsigned long long seed = 5;
};

struct HyperbolicityArgs {
  std::string model = "II:2";
  int grid = 0;  // sphere samples; 0 picks 2000 (n = 2) or 4000
  double tube = 0.05;
  unsigned long long seed = 1;
};

// Each returns a suite report; InvalidArgument means a bad configuration.
// The flow report carries a "trajectories" array.
nlohmann::json flow_suite(const FlowArgs& a);
// Report plus the rendered "svg" and "csv" strings.
nlohmann::json locus_suite(const LocusArgs& a);
nlohmann::json fiber_suite(const FiberArgs& a);
// Report plus "svg" (moment image of the last t over the loci).
nlohmann::json isotopy_suite(const IsotopyArgs& a);
nlohmann::json metric_suite(const MetricArgs& a);
nlohmann::json local_model_suite(const LocalModelArgs& a);
nlohmann::json hyperbolicity_suite_report(const HyperbolicityArgs& a);
nlohmann::json verify_all(unsigned long long seed);

}  // namespace syzflow::cli
