#include "topnav/plot.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <limits>

namespace topnav {

namespace {

constexpr double kWidth = 640.0;
constexpr double kHeight = 520.0;
constexpr double kLeft = 70.0;
constexpr double kRight = 30.0;
constexpr double kTop = 40.0;
constexpr double kBottom = 60.0;

std::string fmt(double v, int digits = 2) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

std::string tick(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.4g", v);
    return buf;
}

std::string escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

// "--" may not appear inside an XML comment.
std::string comment_safe(const std::string& s) {
    std::string out;
    for (char c : s) {
        if (c == '-' && !out.empty() && out.back() == '-') out += ' ';
        out += c;
    }
    return out;
}

struct Range {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();

    void add(double v) {
        if (!std::isfinite(v)) return;
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    bool empty() const { return lo > hi; }
    // Pads degenerate or empty ranges so the mapping stays finite.
    Range padded() const {
        if (empty()) return {0.0, 1.0};
        if (hi - lo <= 1e-12 * std::max(1.0, std::abs(hi))) return {lo - 0.5, hi + 0.5};
        return *this;
    }
};

struct Frame {
    Range x, y;
    double px(double v) const { return kLeft + (v - x.lo) / (x.hi - x.lo) * (kWidth - kLeft - kRight); }
    double py(double v) const { return kHeight - kBottom - (v - y.lo) / (y.hi - y.lo) * (kHeight - kTop - kBottom); }
};

std::string header(const std::string& title, const Provenance& provenance) {
    std::string out = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fmt(kWidth, 0) + "\" height=\"" +
                      fmt(kHeight, 0) + "\" viewBox=\"0 0 " + fmt(kWidth, 0) + " " + fmt(kHeight, 0) + "\">\n";
    out += "<!--\n";
    out += "plot: " + comment_safe(title) + "\n";
    for (const auto& [k, v] : provenance) out += comment_safe(k) + ": " + comment_safe(v) + "\n";
    out += "-->\n";
    out += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    out += "<text x=\"" + fmt(kWidth / 2) + "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" "
           "font-size=\"15\">" + escape(title) + "</text>\n";
    return out;
}

// Tick labels span `ticks`, which defaults to the frame's own ranges.
std::string axes(const Frame& f, const std::string& xlabel, const std::string& ylabel,
                 const Frame* ticks = nullptr) {
    const Frame& t = ticks ? *ticks : f;
    const double x0 = kLeft, x1 = kWidth - kRight, y0 = kHeight - kBottom, y1 = kTop;
    std::string out = "<g stroke=\"black\" stroke-width=\"1\" fill=\"none\">\n";
    out += "<rect x=\"" + fmt(x0) + "\" y=\"" + fmt(y1) + "\" width=\"" + fmt(x1 - x0) + "\" height=\"" +
           fmt(y0 - y1) + "\"/>\n</g>\n";
    out += "<g font-family=\"sans-serif\" font-size=\"11\">\n";
    for (int k = 0; k <= 4; ++k) {
        const double vx = t.x.lo + (t.x.hi - t.x.lo) * k / 4.0;
        const double vy = t.y.lo + (t.y.hi - t.y.lo) * k / 4.0;
        out += "<text x=\"" + fmt(f.px(vx)) + "\" y=\"" + fmt(y0 + 16) + "\" text-anchor=\"middle\">" + tick(vx) +
               "</text>\n";
        out += "<text x=\"" + fmt(x0 - 6) + "\" y=\"" + fmt(f.py(vy) + 4) + "\" text-anchor=\"end\">" + tick(vy) +
               "</text>\n";
    }
    out += "<text x=\"" + fmt((x0 + x1) / 2) + "\" y=\"" + fmt(kHeight - 18) + "\" text-anchor=\"middle\" "
           "font-size=\"13\">" + escape(xlabel) + "</text>\n";
    out += "<text transform=\"translate(18," + fmt((y0 + y1) / 2) + ") rotate(-90)\" text-anchor=\"middle\" "
           "font-size=\"13\">" + escape(ylabel) + "</text>\n";
    out += "</g>\n";
    return out;
}

std::string polyline(const Frame& f, const std::vector<std::pair<double, double>>& pts, const std::string& style) {
    std::string out = "<polyline fill=\"none\" " + style + " points=\"";
    bool first = true;
    for (const auto& [x, y] : pts) {
        if (!std::isfinite(x) || !std::isfinite(y)) continue;
        if (!first) out += ' ';
        out += fmt(f.px(x)) + "," + fmt(f.py(y));
        first = false;
    }
    return out + "\"/>\n";
}

// Viridis sampled at five stops, interpolated linearly.
std::string colour(double t) {
    static const std::array<std::array<double, 3>, 5> stops{{{68, 1, 84},
                                                              {59, 82, 139},
                                                              {33, 145, 140},
                                                              {94, 201, 98},
                                                              {253, 231, 37}}};
    t = std::clamp(t, 0.0, 1.0) * 4.0;
    const std::size_t k = std::min<std::size_t>(static_cast<std::size_t>(t), 3);
    const double u = t - static_cast<double>(k);
    char buf[16];
    int rgb[3];
    for (int c = 0; c < 3; ++c) rgb[c] = static_cast<int>(std::lround(stops[k][c] + u * (stops[k + 1][c] - stops[k][c])));
    std::snprintf(buf, sizeof buf, "#%02x%02x%02x", rgb[0], rgb[1], rgb[2]);
    return buf;
}

}  // namespace

std::string trajectory_svg(const Trajectory& traj, const std::vector<std::string>& state_names, bool standardize,
                           std::size_t tail_start, const Provenance& provenance) {
    if (traj.states.cols < 2) throw InputError("trajectory_svg needs at least two state components");
    const std::size_t n = traj.size();
    std::array<double, 2> mean{0, 0}, scale{1, 1};
    if (standardize && n > 0) {
        for (int c = 0; c < 2; ++c) {
            double s = 0, s2 = 0;
            for (std::size_t r = 0; r < n; ++r) s += traj.states(r, c);
            mean[c] = s / static_cast<double>(n);
            for (std::size_t r = 0; r < n; ++r) s2 += (traj.states(r, c) - mean[c]) * (traj.states(r, c) - mean[c]);
            const double sd = std::sqrt(s2 / static_cast<double>(n));
            scale[c] = sd > 0 ? sd : 1.0;
        }
    }
    std::vector<std::pair<double, double>> head, tail;
    Frame f;
    for (std::size_t r = 0; r < n; ++r) {
        const double x = (traj.states(r, 0) - mean[0]) / scale[0];
        const double y = (traj.states(r, 1) - mean[1]) / scale[1];
        f.x.add(x);
        f.y.add(y);
        (r < tail_start ? head : tail).emplace_back(x, y);
    }
    if (!head.empty() && !tail.empty()) head.push_back(tail.front());
    f.x = f.x.padded();
    f.y = f.y.padded();
    const std::string suffix = standardize ? " (standardized)" : "";
    std::string out = header("trajectory" + suffix, provenance);
    out += axes(f, state_names[0] + suffix, state_names[1] + suffix);
    out += polyline(f, head, "stroke=\"#bbbbbb\" stroke-width=\"0.6\"");
    out += polyline(f, tail, "stroke=\"#1f4e9c\" stroke-width=\"0.9\"");
    return out + "</svg>\n";
}

std::string diagram_svg(const PersistenceDiagram& diag, const Provenance& provenance) {
    Range r;
    r.add(0.0);
    for (const auto& p : diag.pairs) {
        if (p.essential()) continue;
        r.add(p.birth);
        r.add(p.death);
    }
    r = r.padded();
    r.hi *= 1.05;
    Frame f{r, r};
    std::string out = header("persistence diagram", provenance);
    out += axes(f, "birth", "death");
    out += "<line x1=\"" + fmt(f.px(r.lo)) + "\" y1=\"" + fmt(f.py(r.lo)) + "\" x2=\"" + fmt(f.px(r.hi)) +
           "\" y2=\"" + fmt(f.py(r.hi)) + "\" stroke=\"#888888\" stroke-dasharray=\"4 3\"/>\n";
    for (const auto& p : diag.pairs) {
        if (p.essential()) continue;
        const char* c = p.dim == 0 ? "#d95f02" : "#1b9e77";
        out += "<circle cx=\"" + fmt(f.px(p.birth)) + "\" cy=\"" + fmt(f.py(p.death)) + "\" r=\"3\" fill=\"" + c +
               "\" fill-opacity=\"0.8\"/>\n";
    }
    out += "<g font-family=\"sans-serif\" font-size=\"12\">\n"
           "<circle cx=\"" + fmt(kLeft + 20) + "\" cy=\"" + fmt(kTop + 16) + "\" r=\"4\" fill=\"#d95f02\"/>"
           "<text x=\"" + fmt(kLeft + 30) + "\" y=\"" + fmt(kTop + 20) + "\">H0</text>\n"
           "<circle cx=\"" + fmt(kLeft + 20) + "\" cy=\"" + fmt(kTop + 34) + "\" r=\"4\" fill=\"#1b9e77\"/>"
           "<text x=\"" + fmt(kLeft + 30) + "\" y=\"" + fmt(kTop + 38) + "\">H1</text>\n</g>\n";
    return out + "</svg>\n";
}

std::string heatmap_svg(const SweepResult& sweep, const std::string& feature, const PathRecord* path,
                        const Provenance& provenance) {
    const Matrix& g = sweep.grid(feature);
    Range v;
    for (double x : g.data) v.add(x);
    const bool any = !v.empty();
    v = v.padded();

    // Cell edges halfway between grid values.
    auto edges = [](const Vec& a) {
        Vec e(a.size() + 1);
        if (a.size() == 1) {
            e[0] = a[0] - 0.5;
            e[1] = a[0] + 0.5;
            return e;
        }
        for (std::size_t i = 1; i < a.size(); ++i) e[i] = 0.5 * (a[i - 1] + a[i]);
        e[0] = a[0] - (e[1] - a[0]);
        e.back() = a.back() + (a.back() - e[a.size() - 1]);
        return e;
    };
    const Vec ex = edges(sweep.axes[0]);
    const Vec ey = edges(sweep.axes[1]);
    Frame f{{ex.front(), ex.back()}, {ey.front(), ey.back()}};

    Provenance prov = provenance;
    prov.emplace_back("feature", feature);
    prov.emplace_back("colour scale", any ? "linear from " + tick(v.lo) + " to " + tick(v.hi) : "no finite values");
    std::string out = header(sweep.model + " " + feature, prov);
    out += "<g shape-rendering=\"crispEdges\">\n";
    for (std::size_t iy = 0; iy < sweep.ny(); ++iy) {
        for (std::size_t ix = 0; ix < sweep.nx(); ++ix) {
            const double val = g(iy, ix);
            const std::string fill = std::isfinite(val) ? colour((val - v.lo) / (v.hi - v.lo)) : "#9e9e9e";
            const double x0 = f.px(ex[ix]), x1 = f.px(ex[ix + 1]);
            const double y0 = f.py(ey[iy + 1]), y1 = f.py(ey[iy]);
            out += "<rect x=\"" + fmt(x0) + "\" y=\"" + fmt(y0) + "\" width=\"" + fmt(x1 - x0 + 0.3) +
                   "\" height=\"" + fmt(y1 - y0 + 0.3) + "\" fill=\"" + fill + "\"/>\n";
        }
    }
    out += "</g>\n";
    const Frame ticks{Range{sweep.axes[0].front(), sweep.axes[0].back()}.padded(),
                      Range{sweep.axes[1].front(), sweep.axes[1].back()}.padded()};
    out += axes(f, sweep.axis_names[0], sweep.axis_names[1], &ticks);

    // Colour bar along the right edge of the plot area.
    const double bx = kWidth - kRight + 6;
    for (int k = 0; k < 20; ++k) {
        const double y = kTop + (kHeight - kTop - kBottom) * (19 - k) / 20.0;
        out += "<rect x=\"" + fmt(bx) + "\" y=\"" + fmt(y) + "\" width=\"10\" height=\"" +
               fmt((kHeight - kTop - kBottom) / 20.0 + 0.3) + "\" fill=\"" + colour((k + 0.5) / 20.0) + "\"/>\n";
    }
    if (any) {
        out += "<g font-family=\"sans-serif\" font-size=\"10\" text-anchor=\"end\">\n<text x=\"" + fmt(kWidth - 2) +
               "\" y=\"" + fmt(kTop - 4) + "\">" + tick(v.hi) + "</text>\n<text x=\"" + fmt(kWidth - 2) + "\" y=\"" +
               fmt(kHeight - kBottom + 14) + "\">" + tick(v.lo) + "</text>\n</g>\n";
    }

    if (path && !path->steps.empty()) {
        std::vector<std::pair<double, double>> pts;
        for (const auto& s : path->steps) {
            if (s.mu.size() != sweep.base_mu.size()) continue;
            pts.emplace_back(s.mu[sweep.axis_index[0]], s.mu[sweep.axis_index[1]]);
        }
        out += polyline(f, pts, "stroke=\"#e41a1c\" stroke-width=\"1.6\"");
        if (!pts.empty()) {
            out += "<circle cx=\"" + fmt(f.px(pts.front().first)) + "\" cy=\"" + fmt(f.py(pts.front().second)) +
                   "\" r=\"4\" fill=\"white\" stroke=\"#e41a1c\"/>\n";
            out += "<circle cx=\"" + fmt(f.px(pts.back().first)) + "\" cy=\"" + fmt(f.py(pts.back().second)) +
                   "\" r=\"4\" fill=\"#e41a1c\"/>\n";
        }
    }
    return out + "</svg>\n";
}

std::string loss_svg(const PathRecord& path, const Provenance& provenance) {
    Frame f;
    std::vector<std::pair<double, double>> pts;
    for (const auto& s : path.steps) {
        f.x.add(static_cast<double>(s.epoch));
        f.y.add(s.loss);
        pts.emplace_back(static_cast<double>(s.epoch), s.loss);
    }
    f.x = f.x.padded();
    f.y = f.y.padded();
    std::string out = header("loss", provenance);
    out += axes(f, "epoch", "loss");
    out += polyline(f, pts, "stroke=\"#1f4e9c\" stroke-width=\"1.2\"");
    return out + "</svg>\n";
}

}  // namespace topnav
