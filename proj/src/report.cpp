#include "syzflow/report.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

#include "syzflow/errors.hpp"

namespace syzflow {

namespace {

std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string px(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", x);
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace

void to_json(nlohmann::json& j, const CheckRecord& r) {
  j = nlohmann::json{{"claim_anchor", r.claim_anchor},
                     {"computed", r.computed},
                     {"expected", r.expected},
                     {"tolerance", number(r.tolerance)},
                     {"pass", r.pass}};
  if (!r.detail.is_null()) j["detail"] = r.detail;
}

bool all_pass(const std::vector<CheckRecord>& records) {
  for (const auto& r : records)
    if (!r.pass) return false;
  return true;
}

nlohmann::json suite_report(const std::string& suite, const nlohmann::json& config,
                            const std::vector<CheckRecord>& records) {
  nlohmann::json j;
  j["suite"] = suite;
  j["config"] = config;
  j["records"] = records;
  j["pass"] = all_pass(records);
  return j;
}

nlohmann::json number(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  return x;
}

std::string dump(const nlohmann::json& j) { return j.dump(2) + "\n"; }

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::InvalidArgument, "cannot write " + path);
  out << content;
  if (!out) throw Error(ErrorKind::InvalidArgument, "write failed: " + path);
}

Svg::Svg(double width, double height, double x0, double y0, double x1, double y1)
    : w_(width), h_(height), x0_(x0), y0_(y0), x1_(x1), y1_(y1) {
  if (!(x1 > x0) || !(y1 > y0) || !(width > 0) || !(height > 0))
    throw Error(ErrorKind::InvalidArgument, "empty svg window");
}

std::pair<double, double> Svg::map(double x, double y) const {
  return {(x - x0_) / (x1_ - x0_) * w_, h_ - (y - y0_) / (y1_ - y0_) * h_};
}

void Svg::polyline(const std::vector<std::array<double, 2>>& pts, const std::string& stroke,
                   double stroke_width) {
  if (pts.size() < 2) return;
  std::string d;
  for (size_t k = 0; k < pts.size(); ++k) {
    auto [u, v] = map(pts[k][0], pts[k][1]);
    d += (k == 0 ? "M" : " L") + px(u) + " " + px(v);
  }
  body_ += "<path d=\"" + d + "\" fill=\"none\" stroke=\"" + escape(stroke) + "\" stroke-width=\"" +
           px(stroke_width) + "\"/>\n";
}

void Svg::dots(const std::vector<std::array<double, 2>>& pts, const std::string& fill, double radius) {
  for (const auto& p : pts) {
    auto [u, v] = map(p[0], p[1]);
    body_ += "<circle cx=\"" + px(u) + "\" cy=\"" + px(v) + "\" r=\"" + px(radius) + "\" fill=\"" +
             escape(fill) + "\"/>\n";
  }
}

void Svg::text(double x, double y, const std::string& s, double size) {
  auto [u, v] = map(x, y);
  body_ += "<text x=\"" + px(u) + "\" y=\"" + px(v) + "\" font-size=\"" + px(size) + "\">" + escape(s) +
           "</text>\n";
}

std::string Svg::str() const {
  return "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + px(w_) + "\" height=\"" + px(h_) +
         "\" viewBox=\"0 0 " + px(w_) + " " + px(h_) + "\">\n" + body_ + "</svg>\n";
}

std::string csv(const std::vector<std::string>& header, const std::vector<std::vector<double>>& rows) {
  std::vector<std::vector<std::string>> s;
  s.reserve(rows.size());
  for (const auto& r : rows) {
    std::vector<std::string> row;
    for (double x : r) row.push_back(fmt(x));
    s.push_back(std::move(row));
  }
  return csv(header, s);
}

std::string csv(const std::vector<std::string>& header, const std::vector<std::vector<std::string>>& rows) {
  auto line = [](const std::vector<std::string>& cells) {
    std::string out;
    for (size_t k = 0; k < cells.size(); ++k) out += (k ? "," : "") + cells[k];
    return out + "\n";
  };
  std::string out = line(header);
  for (const auto& r : rows) {
    if (r.size() != header.size()) throw Error(ErrorKind::InvalidArgument, "csv row width");
    out += line(r);
  }
  return out;
}

}  // namespace syzflow
