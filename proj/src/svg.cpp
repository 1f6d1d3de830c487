#include "folopt/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace folopt {

namespace {

std::string num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

}  // namespace

std::string render_svg(const SvgCurve& curve, int width, int height) {
    if (curve.x.size() != curve.y.size() || curve.x.size() < 2)
        throw std::invalid_argument("render_svg: need at least two points");
    const double ml = 70.0, mr = 20.0, mt = 36.0, mb = 52.0;
    const double pw = width - ml - mr, ph = height - mt - mb;

    double xmin = curve.x.front(), xmax = curve.x.front();
    double ymin = curve.y.front(), ymax = curve.y.front();
    for (std::size_t i = 0; i < curve.x.size(); ++i) {
        xmin = std::min(xmin, curve.x[i]);
        xmax = std::max(xmax, curve.x[i]);
        ymin = std::min(ymin, curve.y[i]);
        ymax = std::max(ymax, curve.y[i]);
    }
    if (xmax == xmin) xmax = xmin + 1.0;
    if (ymax == ymin) {
        ymax += 0.5;
        ymin -= 0.5;
    }
    const double ypad = 0.04 * (ymax - ymin);
    ymin -= ypad;
    ymax += ypad;

    auto px = [&](double x) { return ml + pw * (x - xmin) / (xmax - xmin); };
    auto py = [&](double y) { return mt + ph * (1.0 - (y - ymin) / (ymax - ymin)); };

    std::string s;
    char buf[512];
    auto add = [&](const char* fmt, auto... args) {
        if constexpr (sizeof...(args) == 0)
            std::snprintf(buf, sizeof(buf), "%s", fmt);
        else
            std::snprintf(buf, sizeof(buf), fmt, args...);
        s += buf;
    };
    add("<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%d\" height=\"%d\" "
        "viewBox=\"0 0 %d %d\">\n",
        width, height, width, height);
    add("<rect width=\"%d\" height=\"%d\" fill=\"white\"/>\n", width, height);
    add("<text x=\"%g\" y=\"20\" font-size=\"15\" font-family=\"sans-serif\">%s</text>\n",
        ml, curve.title.c_str());

    // Axes with a handful of ticks.
    add("<g stroke=\"black\" stroke-width=\"1\">\n");
    add("<line x1=\"%g\" y1=\"%g\" x2=\"%g\" y2=\"%g\"/>\n", ml, mt + ph, ml + pw, mt + ph);
    add("<line x1=\"%g\" y1=\"%g\" x2=\"%g\" y2=\"%g\"/>\n", ml, mt, ml, mt + ph);
    s += "</g>\n";
    const int nticks = 6;
    for (int i = 0; i <= nticks; ++i) {
        const double xv = xmin + (xmax - xmin) * i / nticks;
        const double yv = ymin + (ymax - ymin) * i / nticks;
        add("<line x1=\"%g\" y1=\"%g\" x2=\"%g\" y2=\"%g\" stroke=\"black\"/>\n", px(xv), mt + ph,
            px(xv), mt + ph + 5.0);
        add("<text x=\"%g\" y=\"%g\" font-size=\"11\" font-family=\"sans-serif\" "
            "text-anchor=\"middle\">%s</text>\n",
            px(xv), mt + ph + 18.0, num(xv).c_str());
        add("<line x1=\"%g\" y1=\"%g\" x2=\"%g\" y2=\"%g\" stroke=\"black\"/>\n", ml - 5.0, py(yv),
            ml, py(yv));
        add("<text x=\"%g\" y=\"%g\" font-size=\"11\" font-family=\"sans-serif\" "
            "text-anchor=\"end\">%s</text>\n",
            ml - 8.0, py(yv) + 4.0, num(yv).c_str());
    }
    add("<text x=\"%g\" y=\"%g\" font-size=\"13\" font-family=\"sans-serif\" "
        "text-anchor=\"middle\">%s</text>\n",
        ml + pw / 2.0, mt + ph + 40.0, curve.xlabel.c_str());
    add("<text x=\"16\" y=\"%g\" font-size=\"13\" font-family=\"sans-serif\" "
        "text-anchor=\"middle\" transform=\"rotate(-90 16 %g)\">%s</text>\n",
        mt + ph / 2.0, mt + ph / 2.0, curve.ylabel.c_str());

    for (double v : curve.verticals) {
        if (v < xmin || v > xmax) continue;
        add("<line x1=\"%g\" y1=\"%g\" x2=\"%g\" y2=\"%g\" stroke=\"gray\" "
            "stroke-dasharray=\"5,4\"/>\n",
            px(v), mt, px(v), mt + ph);
    }

    s += "<polyline fill=\"none\" stroke=\"#1f6fb2\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < curve.x.size(); ++i) {
        add("%g,%g ", px(curve.x[i]), py(curve.y[i]));
    }
    s += "\"/>\n</svg>\n";
    return s;
}

}  // namespace folopt
