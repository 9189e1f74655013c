#include "conscale/svg.hpp"

#include <cmath>
#include <fstream>

#include "conscale/csvio.hpp"
#include "conscale/errors.hpp"

namespace conscale {

SvgMapLayout SvgMapLayout::for_map(std::size_t points, std::size_t levels) {
  SvgMapLayout l;
  l.cell_w = points >= 600 ? 1 : (600 + points - 1) / points;
  l.cell_h = levels >= 240 ? 1 : (240 + levels - 1) / levels;
  return l;
}

void render_map_svg(const CredibilityMap& map, const std::string& path,
                    const Vec& marker_lambdas) {
  if (map.levels() == 0 || map.points() == 0)
    throw InvalidInputError("render_map_svg: empty map");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path + "'");

  const std::size_t r = map.points();
  const std::size_t levels = map.levels();
  const SvgMapLayout ly = SvgMapLayout::for_map(r, levels);
  const std::size_t plot_w = r * ly.cell_w;
  const std::size_t plot_h = levels * ly.cell_h;
  const std::size_t width = ly.margin_left + plot_w + ly.margin_right;
  const std::size_t height = ly.margin_top + plot_h + ly.margin_bottom;

  out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\""
      << width << "\" height=\"" << height << "\" viewBox=\"0 0 " << width
      << ' ' << height << "\">\n";
  out << "<style>\n"
      << ".none { fill: #cfcfcf; }\n"
      << ".inc { fill: #b2182b; }\n"
      << ".dec { fill: #2166ac; }\n"
      << ".axis { stroke: #000000; stroke-width: 1; }\n"
      << ".marker { stroke-width: 2; fill: none; }\n"
      << "text { font-family: sans-serif; font-size: 11px; fill: #000000; }\n"
      << "</style>\n";

  // background covers every cell; only credible runs are drawn on top
  out << "<rect class=\"none\" x=\"" << ly.margin_left << "\" y=\""
      << ly.margin_top << "\" width=\"" << plot_w << "\" height=\"" << plot_h
      << "\"/>\n";

  // coarse scales (large lambda) at the top
  for (std::size_t level = 0; level < levels; ++level) {
    const std::size_t y = ly.margin_top + (levels - 1 - level) * ly.cell_h;
    std::size_t j = 0;
    while (j < r) {
      const std::int8_t f = map.flag(level, j);
      std::size_t end = j + 1;
      while (end < r && map.flag(level, end) == f) ++end;
      if (f != kNone) {
        out << "<rect class=\"" << (f == kIncreasing ? "inc" : "dec")
            << "\" x=\"" << ly.margin_left + j * ly.cell_w << "\" y=\"" << y
            << "\" width=\"" << (end - j) * ly.cell_w << "\" height=\""
            << ly.cell_h << "\"/>\n";
      }
      j = end;
    }
  }

  // frame
  out << "<rect class=\"axis\" fill=\"none\" x=\"" << ly.margin_left
      << "\" y=\"" << ly.margin_top << "\" width=\"" << plot_w
      << "\" height=\"" << plot_h << "\"/>\n";

  // time axis: age BP decreasing toward the right
  const double t_lo = map.s.front();
  const double t_hi = map.s.back();
  const int n_ticks = 6;
  for (int k = 0; k <= n_ticks; ++k) {
    const double t = t_lo + (t_hi - t_lo) * (double)k / n_ticks;
    const double fx = r < 2 ? 0.0 : (t - t_lo) / (t_hi - t_lo);
    const std::size_t x =
        ly.margin_left + (std::size_t)std::lround(fx * (double)(plot_w - 1));
    const std::size_t y0 = ly.margin_top + plot_h;
    out << "<line class=\"axis\" x1=\"" << x << "\" y1=\"" << y0 << "\" x2=\""
        << x << "\" y2=\"" << y0 + 5 << "\"/>\n";
    out << "<text x=\"" << x << "\" y=\"" << y0 + 18
        << "\" text-anchor=\"middle\">" << fmt_double(age_bp_from_internal(t))
        << "</text>\n";
  }
  out << "<text x=\"" << ly.margin_left + plot_w / 2 << "\" y=\""
      << ly.margin_top + plot_h + 36
      << "\" text-anchor=\"middle\">age (years BP)</text>\n";

  // scale axis: powers of ten within the lambda range
  const double log_lo = std::log10(map.lambdas.front());
  const double log_hi = std::log10(map.lambdas.back());
  for (int e = (int)std::ceil(log_lo); e <= (int)std::floor(log_hi); ++e) {
    const double f = levels < 2 ? 0.0 : ((double)e - log_lo) / (log_hi - log_lo);
    const std::size_t y =
        ly.margin_top + plot_h -
        (std::size_t)std::lround(f * (double)(plot_h - 1)) - 1;
    out << "<line class=\"axis\" x1=\"" << ly.margin_left - 5 << "\" y1=\"" << y
        << "\" x2=\"" << ly.margin_left << "\" y2=\"" << y << "\"/>\n";
    out << "<text x=\"" << ly.margin_left - 8 << "\" y=\"" << y + 4
        << "\" text-anchor=\"end\">1e" << e << "</text>\n";
  }
  out << "<text x=\"12\" y=\"" << ly.margin_top + plot_h / 2
      << "\" transform=\"rotate(-90 12 " << ly.margin_top + plot_h / 2
      << ")\" text-anchor=\"middle\">smoothing level</text>\n";

  // user-chosen marker levels
  static const char* marker_colors[] = {"#7fd4ff", "#9b59b6", "#d4c200",
                                        "#2ecc71"};
  for (std::size_t i = 0; i < marker_lambdas.size(); ++i) {
    const double lam = marker_lambdas[i];
    if (!(lam >= map.lambdas.front()) || !(lam <= map.lambdas.back())) continue;
    const double f = (std::log10(lam) - log_lo) / (log_hi - log_lo);
    const std::size_t y =
        ly.margin_top + plot_h -
        (std::size_t)std::lround(f * (double)(plot_h - 1)) - 1;
    out << "<line class=\"marker\" stroke=\"" << marker_colors[i % 4]
        << "\" x1=\"" << ly.margin_left << "\" y1=\"" << y << "\" x2=\""
        << ly.margin_left + plot_w << "\" y2=\"" << y << "\"/>\n";
  }

  out << "</svg>\n";
  if (!out) throw IoError("write failed for '" + path + "'");
}

}  // namespace conscale
