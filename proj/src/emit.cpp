#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "ksblow/emit.hpp"
#include "ksblow/errors.hpp"
#include "ksblow/format.hpp"

namespace ksblow {

std::string fmt(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, end);
}

std::string to_csv(const Table& t) {
  std::string out;
  for (std::size_t i = 0; i < t.header.size(); ++i) out += (i ? "," : "") + t.header[i];
  out += '\n';
  for (const auto& row : t.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out += ',';
      out += fmt(row[i]);
    }
    out += '\n';
  }
  return out;
}

nlohmann::json json_number(double x) { return std::isfinite(x) ? nlohmann::json(x) : nlohmann::json(nullptr); }

nlohmann::json to_json(const Table& t) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& row : t.rows) {
    nlohmann::json r = nlohmann::json::array();
    for (double v : row) r.push_back(json_number(v));
    rows.push_back(std::move(r));
  }
  return {{"columns", t.header}, {"rows", std::move(rows)}};
}

std::string dump(const nlohmann::json& j) { return j.dump(2) + "\n"; }

namespace {

std::string esc(const std::string& s) {
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

std::string num(double x) {
  char buf[32];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), x, std::chars_format::fixed, 2);
  return std::string(buf, end);
}

}  // namespace

std::string to_svg(const PlotSpec& p) {
  constexpr double W = 720, H = 440, L = 80, R = 20, T = 40, B = 60;
  auto tx = [&](double v) { return p.log_x ? std::log10(v) : v; };
  auto ty = [&](double v) { return p.log_y ? std::log10(v) : v; };
  auto usable = [&](double x, double y) {
    return std::isfinite(x) && std::isfinite(y) && (!p.log_x || x > 0) && (!p.log_y || y > 0);
  };
  double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
  for (const auto& s : p.series) {
    for (std::size_t i = 0; i < std::min(s.x.size(), s.y.size()); ++i) {
      if (!usable(s.x[i], s.y[i])) continue;
      x0 = std::min(x0, tx(s.x[i])), x1 = std::max(x1, tx(s.x[i]));
      y0 = std::min(y0, ty(s.y[i])), y1 = std::max(y1, ty(s.y[i]));
    }
  }
  for (double h : p.h_lines) {
    if (usable(1.0, h)) y0 = std::min(y0, ty(h)), y1 = std::max(y1, ty(h));
  }
  if (!(x0 <= x1)) x0 = 0, x1 = 1;
  if (!(y0 <= y1)) y0 = 0, y1 = 1;
  if (x1 - x0 == 0) x0 -= 0.5, x1 += 0.5;
  if (y1 - y0 == 0) y0 -= 0.5, y1 += 0.5;
  auto px = [&](double v) { return L + (tx(v) - x0) / (x1 - x0) * (W - L - R); };
  auto py = [&](double v) { return H - B - (ty(v) - y0) / (y1 - y0) * (H - T - B); };

  static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};
  std::ostringstream o;
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  o << "<text x=\"" << W / 2 << "\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">" << esc(p.title) << "</text>\n";
  o << "<rect x=\"" << L << "\" y=\"" << T << "\" width=\"" << W - L - R << "\" height=\"" << H - T - B
    << "\" fill=\"none\" stroke=\"black\"/>\n";
  auto label = [&](double v, bool log) { return log ? "1e" + fmt(std::round(v * 100) / 100) : fmt(std::round(v * 1e4) / 1e4); };
  for (int k = 0; k <= 4; ++k) {
    const double fx = x0 + (x1 - x0) * k / 4, fy = y0 + (y1 - y0) * k / 4;
    const double sx = L + (W - L - R) * k / 4, sy = H - B - (H - T - B) * k / 4;
    o << "<text x=\"" << num(sx) << "\" y=\"" << H - B + 16 << "\" text-anchor=\"middle\">" << label(fx, p.log_x) << "</text>\n";
    o << "<text x=\"" << L - 6 << "\" y=\"" << num(sy + 4) << "\" text-anchor=\"end\">" << label(fy, p.log_y) << "</text>\n";
  }
  o << "<text x=\"" << (W + L - R) / 2 << "\" y=\"" << H - 15 << "\" text-anchor=\"middle\">" << esc(p.x_label) << "</text>\n";
  o << "<text x=\"15\" y=\"" << (H - B + T) / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 15 " << (H - B + T) / 2
    << ")\">" << esc(p.y_label) << "</text>\n";
  for (double h : p.h_lines) {
    if (!usable(1.0, h)) continue;
    o << "<line x1=\"" << L << "\" x2=\"" << W - R << "\" y1=\"" << num(py(h)) << "\" y2=\"" << num(py(h))
      << "\" stroke=\"gray\" stroke-dasharray=\"4 3\"/>\n";
  }
  for (std::size_t s = 0; s < p.series.size(); ++s) {
    const auto& ser = p.series[s];
    const char* c = colors[s % 6];
    o << "<polyline fill=\"none\" stroke=\"" << c << "\" stroke-width=\"1.5\" points=\"";
    bool first = true;
    for (std::size_t i = 0; i < std::min(ser.x.size(), ser.y.size()); ++i) {
      if (!usable(ser.x[i], ser.y[i])) continue;
      o << (first ? "" : " ") << num(px(ser.x[i])) << "," << num(py(ser.y[i]));
      first = false;
    }
    o << "\"/>\n";
    o << "<text x=\"" << W - R - 6 << "\" y=\"" << T + 16 + 16 * s << "\" text-anchor=\"end\" fill=\"" << c << "\">"
      << esc(ser.name) << "</text>\n";
  }
  o << "</svg>\n";
  return o.str();
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  if (ec) throw DomainError("cannot create directory " + path.parent_path().string() + ": " + ec.message());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DomainError("cannot open " + path.string() + " for writing");
  out << content;
  if (!out) throw DomainError("write failed for " + path.string());
}

}  // namespace ksblow
