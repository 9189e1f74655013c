#pragma once

#include <string>

#include "conscale/linalg.hpp"
#include "conscale/scalespace.hpp"

namespace conscale {

// Raster of the credibility lattice as SVG 1.1: red cells for credible
// warming, blue for cooling, gray background elsewhere. Time runs left to
// right toward the present with age-BP labels; the scale axis is log-lambda,
// coarse scales on top. `marker_lambdas` draws labeled horizontal lines at
// chosen scale levels. Equal-flag runs are merged into single rectangles.
void render_map_svg(const CredibilityMap& map, const std::string& path,
                    const Vec& marker_lambdas = {});

// Cell geometry used by the renderer; exposed so readers of the file can map
// rectangles back to lattice coordinates.
struct SvgMapLayout {
  std::size_t margin_left = 64;
  std::size_t margin_top = 12;
  std::size_t margin_right = 16;
  std::size_t margin_bottom = 44;
  std::size_t cell_w = 1;
  std::size_t cell_h = 1;

  static SvgMapLayout for_map(std::size_t points, std::size_t levels);
};

}  // namespace conscale
