#pragma once

#include <array>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

namespace syzflow {

// One checked claim.  computed/expected are JSON so that counts, bounds and
// small vectors fit the same record.
struct CheckRecord {
  std::string claim_anchor;
  nlohmann::json computed;
  nlohmann::json expected;
  double tolerance = 0.0;
  bool pass = false;
  nlohmann::json detail;  // null unless a check has more to say
};

void to_json(nlohmann::json& j, const CheckRecord& r);

bool all_pass(const std::vector<CheckRecord>& records);

// {"suite", "config", "records", "pass"}; keys sort, so the dump is stable.
nlohmann::json suite_report(const std::string& suite, const nlohmann::json& config,
                            const std::vector<CheckRecord>& records);

// Non-finite doubles become strings ("nan", "inf", "-inf") instead of null.
nlohmann::json number(double x);

std::string dump(const nlohmann::json& j);
// Throws InvalidArgument when the file cannot be written.
void write_file(const std::string& path, const std::string& content);

// Bare-bones SVG: a data window mapped onto a pixel canvas, y up.
class Svg {
 public:
  Svg(double width, double height, double x0, double y0, double x1, double y1);
  void polyline(const std::vector<std::array<double, 2>>& pts, const std::string& stroke,
                double stroke_width = 1.0);
  void dots(const std::vector<std::array<double, 2>>& pts, const std::string& fill, double radius = 1.0);
  void text(double x, double y, const std::string& s, double size = 12.0);
  std::string str() const;

 private:
  std::pair<double, double> map(double x, double y) const;
  double w_, h_, x0_, y0_, x1_, y1_;
  std::string body_;
};

// Comma separated, header first, %.17g numbers.
std::string csv(const std::vector<std::string>& header, const std::vector<std::vector<double>>& rows);
std::string csv(const std::vector<std::string>& header, const std::vector<std::vector<std::string>>& rows);

}  // namespace syzflow
