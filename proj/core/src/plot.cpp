#include "camo/plot.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "camo/error.hpp"
#include "camo/png_io.hpp"

namespace camo {
namespace {

struct Rgb {
  double r, g, b;
};

Rgb condition_colour(Condition c) {
  switch (c) {
    case Condition::Clean: return {0.12, 0.47, 0.71};
    case Condition::Noise: return {1.00, 0.50, 0.05};
    case Condition::Patch: return {0.17, 0.63, 0.17};
  }
  return {0, 0, 0};
}

std::string hex(Rgb c) {
  char buf[8];
  std::snprintf(buf, sizeof buf, "#%02x%02x%02x", static_cast<int>(std::lround(c.r * 255)),
                static_cast<int>(std::lround(c.g * 255)), static_cast<int>(std::lround(c.b * 255)));
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char ch : s) {
    switch (ch) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      default: out += ch;
    }
  }
  return out;
}

/// Step curve through (recall, precision) starting at recall 0.
std::vector<std::pair<double, double>> step_curve(const EvalReport& r) {
  std::vector<std::pair<double, double>> pts;
  if (r.pr_points.empty()) return pts;
  pts.emplace_back(0.0, r.pr_points.front().precision);
  for (const auto& p : r.pr_points) {
    pts.emplace_back(p.recall, pts.back().second);
    pts.emplace_back(p.recall, p.precision);
  }
  return pts;
}

struct Frame {
  double x0, y0, w, h;
  double px(double recall) const { return x0 + recall * w; }
  double py(double precision) const { return y0 + (1.0 - precision) * h; }
};

void put(Image& img, int x, int y, Rgb c) {
  if (x < 0 || y < 0 || x >= img.width() || y >= img.height()) return;
  img.at(0, y, x) = c.r;
  img.at(1, y, x) = c.g;
  img.at(2, y, x) = c.b;
}

void line(Image& img, double xa, double ya, double xb, double yb, Rgb c, int thickness) {
  const int steps = static_cast<int>(std::ceil(std::max(std::abs(xb - xa), std::abs(yb - ya)))) + 1;
  for (int i = 0; i <= steps; ++i) {
    const double t = static_cast<double>(i) / steps;
    const int x = static_cast<int>(std::lround(xa + t * (xb - xa)));
    const int y = static_cast<int>(std::lround(ya + t * (yb - ya)));
    for (int dy = -(thickness / 2); dy <= thickness / 2; ++dy)
      for (int dx = -(thickness / 2); dx <= thickness / 2; ++dx) put(img, x + dx, y + dy, c);
  }
}

}  // namespace

std::string render_pr_svg(std::span<const EvalReport> reports, const std::string& title) {
  constexpr int kW = 640, kH = 480;
  const Frame f{70, 40, 520, 380};
  std::ostringstream s;
  s.precision(6);
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kW << "\" height=\"" << kH
    << "\" viewBox=\"0 0 " << kW << ' ' << kH << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  s << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  for (int i = 0; i <= 10; ++i) {
    const double v = i / 10.0;
    s << "<line x1=\"" << f.px(v) << "\" y1=\"" << f.py(0) << "\" x2=\"" << f.px(v) << "\" y2=\""
      << f.py(1) << "\" stroke=\"#dddddd\"/>\n";
    s << "<line x1=\"" << f.px(0) << "\" y1=\"" << f.py(v) << "\" x2=\"" << f.px(1) << "\" y2=\""
      << f.py(v) << "\" stroke=\"#dddddd\"/>\n";
    if (i % 2 == 0) {
      s << "<text x=\"" << f.px(v) << "\" y=\"" << f.py(0) + 16 << "\" text-anchor=\"middle\">" << v
        << "</text>\n";
      s << "<text x=\"" << f.px(0) - 6 << "\" y=\"" << f.py(v) + 4 << "\" text-anchor=\"end\">" << v
        << "</text>\n";
    }
  }
  s << "<rect x=\"" << f.x0 << "\" y=\"" << f.y0 << "\" width=\"" << f.w << "\" height=\"" << f.h
    << "\" fill=\"none\" stroke=\"black\"/>\n";
  s << "<text x=\"" << f.px(0.5) << "\" y=\"" << kH - 8 << "\" text-anchor=\"middle\">Recall</text>\n";
  s << "<text x=\"16\" y=\"" << f.py(0.5) << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 "
    << f.py(0.5) << ")\">Precision</text>\n";
  if (!title.empty())
    s << "<text x=\"" << f.px(0.5) << "\" y=\"24\" text-anchor=\"middle\" font-size=\"14\">"
      << escape(title) << "</text>\n";

  for (std::size_t k = 0; k < reports.size(); ++k) {
    const EvalReport& r = reports[k];
    const std::string colour = hex(condition_colour(r.condition));
    s << "<polyline fill=\"none\" stroke=\"" << colour << "\" stroke-width=\"2\" points=\"";
    for (const auto& [rec, prec] : step_curve(r)) s << f.px(rec) << ',' << f.py(prec) << ' ';
    s << "\"/>\n";
    const double ly = f.y0 + f.h - 20.0 * (reports.size() - k);
    char ap[32];
    std::snprintf(ap, sizeof ap, "%.1f", 100.0 * r.ap);
    s << "<line x1=\"" << f.px(0.05) << "\" y1=\"" << ly << "\" x2=\"" << f.px(0.1) << "\" y2=\"" << ly
      << "\" stroke=\"" << colour << "\" stroke-width=\"3\"/>\n";
    s << "<text x=\"" << f.px(0.11) << "\" y=\"" << ly + 4 << "\">" << to_string(r.condition)
      << " (AP " << ap << "%)</text>\n";
  }
  s << "</svg>\n";
  return s.str();
}

Image render_pr_image(std::span<const EvalReport> reports, int width, int height) {
  require(width >= 64 && height >= 64, "plot must be at least 64x64");
  Image img(3, height, width, 1.0);
  const Frame f{0.1 * width, 0.06 * height, 0.82 * width, 0.82 * height};
  const Rgb grid{0.87, 0.87, 0.87};
  for (int i = 0; i <= 10; ++i) {
    const double v = i / 10.0;
    line(img, f.px(v), f.py(0), f.px(v), f.py(1), grid, 1);
    line(img, f.px(0), f.py(v), f.px(1), f.py(v), grid, 1);
  }
  const Rgb black{0, 0, 0};
  line(img, f.px(0), f.py(0), f.px(1), f.py(0), black, 1);
  line(img, f.px(0), f.py(1), f.px(1), f.py(1), black, 1);
  line(img, f.px(0), f.py(0), f.px(0), f.py(1), black, 1);
  line(img, f.px(1), f.py(0), f.px(1), f.py(1), black, 1);
  for (std::size_t k = 0; k < reports.size(); ++k) {
    const Rgb c = condition_colour(reports[k].condition);
    const auto pts = step_curve(reports[k]);
    for (std::size_t i = 1; i < pts.size(); ++i)
      line(img, f.px(pts[i - 1].first), f.py(pts[i - 1].second), f.px(pts[i].first),
           f.py(pts[i].second), c, 3);
    const double ly = f.py(0) - 14.0 * (reports.size() - k);
    line(img, f.px(0.05), ly, f.px(0.12), ly, c, 5);
  }
  return img;
}

void save_pr_plot(const std::filesystem::path& path, std::span<const EvalReport> reports,
                  const std::string& title) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  const auto ext = path.extension().string();
  if (ext == ".svg") {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write '" + path.string() + "'");
    out << render_pr_svg(reports, title);
  } else if (ext == ".png") {
    write_png(path, render_pr_image(reports));
  } else {
    throw InvalidArgument("plot output must end in .svg or .png, got '" + path.string() + "'");
  }
}

}  // namespace camo
