#pragma once

#include <string>
#include <vector>

namespace folopt {

/// Minimal line-plot description rendered to standalone SVG markup.
struct SvgCurve {
    std::vector<double> x;
    std::vector<double> y;
    std::vector<double> verticals;  ///< dashed markers (e.g. exit times)
    std::string title;
    std::string xlabel;
    std::string ylabel;
};

std::string render_svg(const SvgCurve& curve, int width = 720, int height = 480);

}  // namespace folopt
