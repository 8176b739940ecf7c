#include "robustlab/report.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>
#include <stdexcept>

namespace robustlab {

namespace {

constexpr int kWidth = 720;
constexpr int kHeight = 480;
constexpr int kMarginLeft = 56;
constexpr int kMarginRight = 24;
constexpr int kMarginTop = 24;
constexpr int kMarginBottom = 44;

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                          "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"};

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string polyline(const std::vector<std::pair<double, double>>& pts, const std::string& color,
                     bool dashed) {
  std::ostringstream os;
  os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\"";
  if (dashed) os << " stroke-dasharray=\"6,3\"";
  os << " points=\"";
  for (size_t i = 0; i < pts.size(); ++i) {
    if (i) os << " ";
    os << fmt(pts[i].first) << "," << fmt(pts[i].second);
  }
  os << "\"/>\n";
  return os.str();
}

}  // namespace

std::string render_curves_svg(const std::vector<NamedLog>& runs) {
  if (runs.empty()) throw std::invalid_argument("render_curves_svg: no runs");
  int max_epoch = 1;
  for (const auto& r : runs)
    for (const auto& rec : r.log.records) max_epoch = std::max(max_epoch, rec.epoch);

  const double px0 = kMarginLeft, px1 = kWidth - kMarginRight;
  const double py0 = kHeight - kMarginBottom, py1 = kMarginTop;
  auto x_of = [&](double epoch) { return px0 + (px1 - px0) * epoch / max_epoch; };
  auto y_of = [&](double err) { return py0 + (py1 - py0) * err; };  // err in [0,1]

  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
     << "\" viewBox=\"0 0 " << kWidth << " " << kHeight << "\">\n";
  os << "<rect width=\"" << kWidth << "\" height=\"" << kHeight << "\" fill=\"white\"/>\n";

  // axes and gridlines as <line>, curves as <polyline>
  os << "<line x1=\"" << fmt(px0) << "\" y1=\"" << fmt(py0) << "\" x2=\"" << fmt(px1) << "\" y2=\""
     << fmt(py0) << "\" stroke=\"black\"/>\n";
  os << "<line x1=\"" << fmt(px0) << "\" y1=\"" << fmt(py0) << "\" x2=\"" << fmt(px0) << "\" y2=\""
     << fmt(py1) << "\" stroke=\"black\"/>\n";
  for (int tick = 0; tick <= 10; tick += 2) {
    const double y = y_of(tick / 10.0);
    os << "<line x1=\"" << fmt(px0 - 4) << "\" y1=\"" << fmt(y) << "\" x2=\"" << fmt(px0)
       << "\" y2=\"" << fmt(y) << "\" stroke=\"black\"/>\n";
    os << "<text x=\"" << fmt(px0 - 8) << "\" y=\"" << fmt(y + 4)
       << "\" font-size=\"11\" text-anchor=\"end\">" << fmt(tick / 10.0) << "</text>\n";
  }
  for (int tick = 0; tick <= 4; ++tick) {
    const double e = max_epoch * tick / 4.0;
    os << "<text x=\"" << fmt(x_of(e)) << "\" y=\"" << fmt(py0 + 16)
       << "\" font-size=\"11\" text-anchor=\"middle\">" << static_cast<int>(e) << "</text>\n";
  }
  os << "<text x=\"" << fmt((px0 + px1) / 2) << "\" y=\"" << fmt(py0 + 34)
     << "\" font-size=\"12\" text-anchor=\"middle\">epoch</text>\n";
  os << "<text x=\"14\" y=\"" << fmt((py0 + py1) / 2)
     << "\" font-size=\"12\" text-anchor=\"middle\" transform=\"rotate(-90 14 "
     << fmt((py0 + py1) / 2) << ")\">robust error</text>\n";

  for (size_t r = 0; r < runs.size(); ++r) {
    const std::string color = kPalette[r % (sizeof kPalette / sizeof kPalette[0])];
    std::vector<std::pair<double, double>> train_pts, test_pts;
    for (const auto& rec : runs[r].log.records) {
      train_pts.emplace_back(x_of(rec.epoch), y_of(rec.train_robust_err));
      test_pts.emplace_back(x_of(rec.epoch), y_of(rec.test_robust_err));
    }
    os << polyline(train_pts, color, true);
    os << polyline(test_pts, color, false);
    const double ly = kMarginTop + 16.0 * static_cast<double>(r) + 8;
    os << "<line x1=\"" << fmt(px1 - 150) << "\" y1=\"" << fmt(ly) << "\" x2=\"" << fmt(px1 - 130)
       << "\" y2=\"" << fmt(ly) << "\" stroke=\"" << color << "\" stroke-width=\"1.5\"/>\n";
    os << "<text x=\"" << fmt(px1 - 124) << "\" y=\"" << fmt(ly + 4) << "\" font-size=\"11\">"
       << runs[r].name << " (train dashed / test solid)</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

std::string gap_table_text(const std::vector<NamedLog>& runs) {
  std::ostringstream os;
  char buf[160];
  std::snprintf(buf, sizeof buf, "%-24s %10s %18s %10s %10s\n", "run", "best", "final(last5)",
                "diff", "best_ep");
  os << buf;
  for (const auto& r : runs) {
    const GapReport g = gap_report(r.log, GapMetric::test_robust_err);
    std::snprintf(buf, sizeof buf, "%-24s %10.4f %10.4f+-%.4f %10.4f %10d\n", r.name.c_str(),
                  g.best_err, g.final_mean, g.final_std, g.diff, g.best_epoch);
    os << buf;
  }
  return os.str();
}

}  // namespace robustlab
