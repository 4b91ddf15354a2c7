#include "csbs/harness/plot.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>

#include "csbs/harness/experiment.hpp"

namespace csbs::harness {

namespace {

constexpr double kPanelW = 260, kPanelH = 200, kPad = 44, kTop = 40;
constexpr const char* kCsbsColor = "#ff7f0e";
constexpr const char* kFocalColor = "#1f77b4";

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

}  // namespace

std::string sweep_svg(const SweepResult& result, const SweepConfig& axes) {
  std::vector<double> seps = axes.separation_dof;
  std::sort(seps.begin(), seps.end());
  const double xmin = seps.empty() ? 0.0 : seps.front();
  const double xmax = seps.empty() ? 1.0 : std::max(seps.back(), xmin + 1e-9);

  const auto rows = axes.sources.size(), cols = axes.snr_db.size();
  const double width = static_cast<double>(cols) * (kPanelW + kPad) + kPad;
  const double height = static_cast<double>(rows) * (kPanelH + kPad) + kTop + 20;

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(width) << "\" height=\""
      << num(height) << "\" font-family=\"sans-serif\" font-size=\"11\">\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      << "<text x=\"" << num(kPad) << "\" y=\"18\" font-size=\"13\">Mean reconstruction SSIM vs separation (DOF)</text>\n"
      << "<text x=\"" << num(width - 200) << "\" y=\"18\" fill=\"" << kCsbsColor << "\">CSBS</text>\n"
      << "<text x=\"" << num(width - 140) << "\" y=\"18\" fill=\"" << kFocalColor << "\">focal planes</text>\n";

  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) {
      const double x0 = kPad + static_cast<double>(c) * (kPanelW + kPad);
      const double y0 = kTop + static_cast<double>(r) * (kPanelH + kPad);
      auto px = [&](double sep) { return x0 + (sep - xmin) / (xmax - xmin) * kPanelW; };
      auto py = [&](double s) { return y0 + (1.0 - std::clamp(s, 0.0, 1.0)) * kPanelH; };

      svg << "<rect x=\"" << num(x0) << "\" y=\"" << num(y0) << "\" width=\"" << num(kPanelW)
          << "\" height=\"" << num(kPanelH) << "\" fill=\"none\" stroke=\"#444\"/>\n"
          << "<text x=\"" << num(x0 + 4) << "\" y=\"" << num(y0 + 14) << "\">S=" << axes.sources[r]
          << ", SNR " << num(axes.snr_db[c]) << " dB</text>\n";
      for (double t : {0.0, 0.5, 1.0})
        svg << "<text x=\"" << num(x0 - 26) << "\" y=\"" << num(py(t) + 4) << "\">" << num(t) << "</text>\n";
      for (double sep : seps)
        svg << "<text x=\"" << num(px(sep) - 6) << "\" y=\"" << num(y0 + kPanelH + 14) << "\">" << num(sep)
            << "</text>\n";

      for (int series = 0; series < 2; ++series) {
        std::vector<std::pair<double, double>> pts;
        for (const auto& row : result.rows)
          if (row.ok && row.cell.sources == axes.sources[r] && row.cell.snr_db == axes.snr_db[c])
            pts.emplace_back(row.cell.separation_dof, series == 0 ? row.ssim_csbs : row.ssim_focal);
        std::sort(pts.begin(), pts.end());
        const char* color = series == 0 ? kCsbsColor : kFocalColor;
        if (pts.size() > 1) {
          svg << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
          for (const auto& [x, y] : pts) svg << num(px(x)) << ',' << num(py(y)) << ' ';
          svg << "\"/>\n";
        }
        for (const auto& [x, y] : pts)
          svg << "<circle cx=\"" << num(px(x)) << "\" cy=\"" << num(py(y)) << "\" r=\"2.5\" fill=\"" << color
              << "\"/>\n";
      }
    }
  svg << "</svg>\n";
  return svg.str();
}

}  // namespace csbs::harness
