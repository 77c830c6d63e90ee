#include "hessgan/svg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

namespace hessgan::svg {

namespace {

constexpr int kMarginLeft = 70;
constexpr int kMarginRight = 20;
constexpr int kMarginTop = 36;
constexpr int kMarginBottom = 50;

const char* const kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"};

std::string escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '<':
                out += "&lt;";
                break;
            case '>':
                out += "&gt;";
                break;
            case '&':
                out += "&amp;";
                break;
            default:
                out += c;
        }
    }
    return out;
}

struct Range {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    void add(double v) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    void finish() {
        if (!(lo <= hi)) {
            lo = 0.0;
            hi = 1.0;
        }
        if (hi == lo) {
            lo -= 0.5;
            hi += 0.5;
        }
    }
};

std::string header(int w, int h) {
    return fmt::format(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{0}\" height=\"{1}\" viewBox=\"0 0 {0} {1}\" "
        "font-family=\"sans-serif\" font-size=\"12\">\n<rect width=\"{0}\" height=\"{1}\" fill=\"white\"/>\n",
        w, h);
}

std::string axes(int w, int h, const Range& xr, const Range& yr, const PlotOptions& o) {
    const int x0 = kMarginLeft, x1 = w - kMarginRight, y0 = h - kMarginBottom, y1 = kMarginTop;
    std::string s = fmt::format("<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"black\"/>\n",
                                x0, y1, x1 - x0, y0 - y1);
    for (int i = 0; i <= 4; ++i) {
        const double fx = x0 + (x1 - x0) * i / 4.0;
        const double fy = y0 - (y0 - y1) * i / 4.0;
        const double xv = xr.lo + (xr.hi - xr.lo) * i / 4.0;
        double yv = yr.lo + (yr.hi - yr.lo) * i / 4.0;
        if (o.log_y) yv = std::pow(10.0, yv);
        s += fmt::format("<text x=\"{:.1f}\" y=\"{}\" text-anchor=\"middle\">{:.3g}</text>\n", fx, y0 + 16, xv);
        s += fmt::format("<text x=\"{}\" y=\"{:.1f}\" text-anchor=\"end\">{:.3g}</text>\n", x0 - 6, fy + 4, yv);
    }
    s += fmt::format("<text x=\"{}\" y=\"{}\" text-anchor=\"middle\" font-size=\"14\">{}</text>\n", w / 2, 22,
                     escape(o.title));
    s += fmt::format("<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n", (x0 + x1) / 2, h - 12,
                     escape(o.x_label));
    s += fmt::format("<text x=\"14\" y=\"{}\" text-anchor=\"middle\" transform=\"rotate(-90 14 {})\">{}</text>\n",
                     (y0 + y1) / 2, (y0 + y1) / 2, escape(o.y_label));
    return s;
}

}  // namespace

std::string line_plot(const std::vector<Series>& series, const PlotOptions& o) {
    auto ty = [&](double y) { return o.log_y ? (y > 0.0 ? std::log10(y) : std::nan("")) : y; };
    Range xr, yr;
    for (const auto& s : series) {
        for (std::size_t i = 0; i < std::min(s.x.size(), s.y.size()); ++i) {
            const double y = ty(s.y[i]);
            if (std::isfinite(s.x[i]) && std::isfinite(y)) {
                xr.add(s.x[i]);
                yr.add(y);
            }
        }
    }
    xr.finish();
    yr.finish();
    const int x0 = kMarginLeft, x1 = o.width - kMarginRight, y0 = o.height - kMarginBottom, y1 = kMarginTop;
    auto px = [&](double x) { return x0 + (x - xr.lo) / (xr.hi - xr.lo) * (x1 - x0); };
    auto py = [&](double y) { return y0 - (y - yr.lo) / (yr.hi - yr.lo) * (y0 - y1); };

    std::string out = header(o.width, o.height) + axes(o.width, o.height, xr, yr, o);
    for (std::size_t k = 0; k < series.size(); ++k) {
        const auto& s = series[k];
        const char* color = kColors[k % std::size(kColors)];
        std::string points;
        auto flush = [&] {
            if (!points.empty()) {
                out += fmt::format("<polyline fill=\"none\" stroke=\"{}\" stroke-width=\"1.5\" points=\"{}\"/>\n",
                                   color, points);
            }
            points.clear();
        };
        for (std::size_t i = 0; i < std::min(s.x.size(), s.y.size()); ++i) {
            const double y = ty(s.y[i]);
            if (!std::isfinite(s.x[i]) || !std::isfinite(y)) {
                flush();
                continue;
            }
            points += fmt::format("{:.2f},{:.2f} ", px(s.x[i]), py(y));
        }
        flush();
        if (!s.label.empty()) {
            out += fmt::format("<text x=\"{}\" y=\"{}\" fill=\"{}\">{}</text>\n", x1 - 150,
                               kMarginTop + 16 + 14 * static_cast<int>(k), color, escape(s.label));
        }
    }
    return out + "</svg>\n";
}

std::string density_plot(const SpectralDensity& density, const std::string& title) {
    PlotOptions o;
    o.title = title;
    o.x_label = "eigenvalue";
    o.y_label = "density (log scale)";
    o.log_y = true;
    return line_plot({{"", density.grid, density.density}}, o);
}

std::string landscape_plot(const LandscapeGrid& grid, const std::vector<std::pair<double, double>>& trajectory,
                           const std::string& title) {
    const int w = 520, h = 520;
    const std::size_t nx = grid.alphas.size(), ny = grid.betas.size();
    Range xr, yr, zr;
    for (double a : grid.alphas) xr.add(a);
    for (double b : grid.betas) yr.add(b);
    for (double z : grid.loss.values()) {
        if (std::isfinite(z)) zr.add(z);
    }
    for (const auto& [a, b] : trajectory) {
        xr.add(a);
        yr.add(b);
    }
    xr.finish();
    yr.finish();
    zr.finish();
    PlotOptions o;
    o.title = title;
    o.x_label = "alpha";
    o.y_label = "beta";
    const int x0 = kMarginLeft, x1 = w - kMarginRight, y0 = h - kMarginBottom, y1 = kMarginTop;
    auto px = [&](double x) { return x0 + (x - xr.lo) / (xr.hi - xr.lo) * (x1 - x0); };
    auto py = [&](double y) { return y0 - (y - yr.lo) / (yr.hi - yr.lo) * (y0 - y1); };

    std::string out = header(w, h);
    const double cw = nx > 1 ? std::abs(px(grid.alphas[1]) - px(grid.alphas[0])) : 10.0;
    const double ch = ny > 1 ? std::abs(py(grid.betas[1]) - py(grid.betas[0])) : 10.0;
    for (std::size_t j = 0; j < ny; ++j) {
        for (std::size_t i = 0; i < nx; ++i) {
            const double z = grid.loss(i, j);
            const double t = std::isfinite(z) ? (z - zr.lo) / (zr.hi - zr.lo) : 1.0;
            const int r = static_cast<int>(40 + 215 * t);
            const int b = static_cast<int>(255 - 215 * t);
            out += fmt::format("<rect x=\"{:.2f}\" y=\"{:.2f}\" width=\"{:.2f}\" height=\"{:.2f}\" fill=\"rgb({},80,{})\"/>\n",
                               px(grid.alphas[i]) - cw / 2, py(grid.betas[j]) - ch / 2, cw, ch, r, b);
        }
    }
    out += axes(w, h, xr, yr, o);
    std::string points;
    for (const auto& [a, b] : trajectory) points += fmt::format("{:.2f},{:.2f} ", px(a), py(b));
    if (!points.empty()) {
        out += fmt::format("<polyline fill=\"none\" stroke=\"white\" stroke-width=\"2\" points=\"{}\"/>\n", points);
        const auto& [la, lb] = trajectory.back();
        out += fmt::format("<circle cx=\"{:.2f}\" cy=\"{:.2f}\" r=\"4\" fill=\"yellow\"/>\n", px(la), py(lb));
    }
    return out + "</svg>\n";
}

}  // namespace hessgan::svg
