#include "cryotherm/io/svg.hpp"

#include "cryotherm/io/text.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace cryotherm::io {

std::string xml_escape(const std::string& s) {
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

SvgPlot::SvgPlot(std::string title, std::string x_label, std::string y_label, double width,
                 double height)
    : title_(std::move(title)), x_label_(std::move(x_label)), y_label_(std::move(y_label)),
      width_(width), height_(height) {}

void SvgPlot::add_line(std::vector<double> x, std::vector<double> y, SvgStyle style,
                       std::string css_class, std::string label) {
    items_.push_back({Kind::line, std::move(x), std::move(y), {}, {}, {}, style,
                      std::move(css_class), std::move(label)});
}

void SvgPlot::add_points(std::vector<double> x, std::vector<double> y, SvgStyle style,
                         std::string css_class, std::string label, std::vector<double> y_err,
                         std::vector<double> x_err) {
    items_.push_back({Kind::points, std::move(x), std::move(y), {}, std::move(y_err),
                      std::move(x_err), style, std::move(css_class), std::move(label)});
}

void SvgPlot::add_band(std::vector<double> x, std::vector<double> y_low,
                       std::vector<double> y_high, SvgStyle style, std::string css_class,
                       std::string label) {
    items_.push_back({Kind::band, std::move(x), std::move(y_low), std::move(y_high), {}, {}, style,
                      std::move(css_class), std::move(label)});
}

void SvgPlot::add_arrow(double x0, double y0, double x1, double y1, SvgStyle style,
                        std::string css_class, std::string label) {
    items_.push_back({Kind::arrow, {x0, x1}, {y0, y1}, {}, {}, {}, style, std::move(css_class),
                      std::move(label)});
}

namespace {

struct Range {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();

    void add(double v, bool log) {
        if (!std::isfinite(v) || (log && !(v > 0.0))) {
            return;
        }
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    bool valid() const { return lo <= hi; }
};

void finalize(Range& r, bool log) {
    if (!r.valid()) {
        r.lo = log ? 1.0 : 0.0;
        r.hi = log ? 10.0 : 1.0;
    }
    if (log) {
        r.lo = std::log10(r.lo);
        r.hi = std::log10(r.hi);
    }
    if (r.hi - r.lo <= 1e-300 * std::max(1.0, std::abs(r.hi))) {
        const double pad = r.lo == 0.0 ? 1.0 : 0.1 * std::abs(r.lo);
        r.lo -= pad;
        r.hi += pad;
    } else {
        const double pad = 0.05 * (r.hi - r.lo);
        r.lo -= pad;
        r.hi += pad;
    }
}

std::vector<double> nice_ticks(double lo, double hi) {
    const double span = hi - lo;
    const double raw = span / 6.0;
    const double mag = std::pow(10.0, std::floor(std::log10(raw)));
    double step = mag;
    for (double m : {1.0, 2.0, 5.0, 10.0}) {
        if (m * mag >= raw) {
            step = m * mag;
            break;
        }
    }
    std::vector<double> ticks;
    for (double t = std::ceil(lo / step) * step; t <= hi + 1e-9 * step; t += step) {
        ticks.push_back(std::abs(t) < 1e-12 * step ? 0.0 : t);
    }
    return ticks;
}

}  // namespace

std::string SvgPlot::render() const {
    const double ml = 90, mr = 20, mt = 40, mb = 60;
    double pw = width_ - ml - mr;
    double ph = height_ - mt - mb;

    Range rx, ry;
    for (const auto& it : items_) {
        for (std::size_t i = 0; i < it.x.size(); ++i) {
            const double xe = i < it.x_err.size() ? it.x_err[i] : 0.0;
            rx.add(it.x[i] - xe, log_x_);
            rx.add(it.x[i] + xe, log_x_);
            rx.add(it.x[i], log_x_);
        }
        for (std::size_t i = 0; i < it.y.size(); ++i) {
            const double ye = i < it.y_err.size() ? it.y_err[i] : 0.0;
            ry.add(it.y[i] - ye, log_y_);
            ry.add(it.y[i] + ye, log_y_);
            ry.add(it.y[i], log_y_);
        }
        for (double v : it.y2) {
            ry.add(v, log_y_);
        }
    }
    finalize(rx, log_x_);
    finalize(ry, log_y_);
    double ox = ml, oy = mt;
    if (equal_aspect_) {
        const double sx = pw / (rx.hi - rx.lo);
        const double sy = ph / (ry.hi - ry.lo);
        const double s = std::min(sx, sy);
        const double cx = 0.5 * (rx.lo + rx.hi), cy = 0.5 * (ry.lo + ry.hi);
        rx.lo = cx - 0.5 * pw / s;
        rx.hi = cx + 0.5 * pw / s;
        ry.lo = cy - 0.5 * ph / s;
        ry.hi = cy + 0.5 * ph / s;
    }

    auto tx = [&](double x) {
        const double v = log_x_ ? std::log10(x) : x;
        return ox + (v - rx.lo) / (rx.hi - rx.lo) * pw;
    };
    auto ty = [&](double y) {
        const double v = log_y_ ? std::log10(y) : y;
        return oy + ph - (v - ry.lo) / (ry.hi - ry.lo) * ph;
    };
    auto ok_x = [&](double x) { return std::isfinite(x) && (!log_x_ || x > 0.0); };
    auto ok_y = [&](double y) { return std::isfinite(y) && (!log_y_ || y > 0.0); };
    auto f = [](double v) { return format_short(v); };
    auto stroke = [&](const SvgStyle& s) {
        std::string a = "stroke=\"" + s.color + "\" stroke-width=\"" + f(s.stroke_width) + "\"";
        if (s.dashed) {
            a += " stroke-dasharray=\"6,4\"";
        }
        if (s.opacity < 1.0) {
            a += " stroke-opacity=\"" + f(s.opacity) + "\"";
        }
        return a;
    };

    std::string out;
    out += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + f(width_) + "\" height=\"" +
           f(height_) + "\" viewBox=\"0 0 " + f(width_) + " " + f(height_) + "\">\n";
    out += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    out += "<text class=\"title\" x=\"" + f(width_ / 2) + "\" y=\"24\" text-anchor=\"middle\" "
           "font-family=\"sans-serif\" font-size=\"16\">" + xml_escape(title_) + "</text>\n";
    out += "<rect class=\"frame\" x=\"" + f(ox) + "\" y=\"" + f(oy) + "\" width=\"" + f(pw) +
           "\" height=\"" + f(ph) + "\" fill=\"none\" stroke=\"black\"/>\n";

    // Axes ticks.
    auto axis_ticks = [&](const Range& r, bool log) {
        std::vector<double> t;
        if (log) {
            for (double e = std::ceil(r.lo); e <= r.hi; e += 1.0) {
                t.push_back(std::pow(10.0, e));
            }
        } else {
            t = nice_ticks(r.lo, r.hi);
        }
        return t;
    };
    for (double t : axis_ticks(rx, log_x_)) {
        const double x = tx(t);
        out += "<line x1=\"" + f(x) + "\" y1=\"" + f(oy + ph) + "\" x2=\"" + f(x) + "\" y2=\"" +
               f(oy + ph + 5) + "\" stroke=\"black\"/>\n";
        out += "<text x=\"" + f(x) + "\" y=\"" + f(oy + ph + 20) +
               "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">" + f(t) +
               "</text>\n";
    }
    for (double t : axis_ticks(ry, log_y_)) {
        const double y = ty(t);
        out += "<line x1=\"" + f(ox - 5) + "\" y1=\"" + f(y) + "\" x2=\"" + f(ox) + "\" y2=\"" +
               f(y) + "\" stroke=\"black\"/>\n";
        out += "<text x=\"" + f(ox - 8) + "\" y=\"" + f(y + 4) +
               "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" + f(t) +
               "</text>\n";
    }
    out += "<text class=\"xlabel\" x=\"" + f(ox + pw / 2) + "\" y=\"" + f(height_ - 15) +
           "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\">" +
           xml_escape(x_label_) + "</text>\n";
    out += "<text class=\"ylabel\" x=\"18\" y=\"" + f(oy + ph / 2) +
           "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\" "
           "transform=\"rotate(-90 18 " + f(oy + ph / 2) + ")\">" + xml_escape(y_label_) +
           "</text>\n";

    out += "<defs><clipPath id=\"plot-area\"><rect x=\"" + f(ox) + "\" y=\"" + f(oy) +
           "\" width=\"" + f(pw) + "\" height=\"" + f(ph) + "\"/></clipPath></defs>\n";
    out += "<g clip-path=\"url(#plot-area)\">\n";
    for (const auto& it : items_) {
        const std::string cls = "class=\"" + xml_escape(it.css_class) + "\"";
        switch (it.kind) {
            case Kind::line: {
                std::string pts;
                for (std::size_t i = 0; i < it.x.size() && i < it.y.size(); ++i) {
                    if (ok_x(it.x[i]) && ok_y(it.y[i])) {
                        pts += f(tx(it.x[i])) + "," + f(ty(it.y[i])) + " ";
                    }
                }
                out += "<polyline " + cls + " fill=\"none\" " + stroke(it.style) + " points=\"" +
                       pts + "\"/>\n";
                break;
            }
            case Kind::points: {
                out += "<g " + cls + " fill=\"" + it.style.color + "\">\n";
                for (std::size_t i = 0; i < it.x.size() && i < it.y.size(); ++i) {
                    if (!ok_x(it.x[i]) || !ok_y(it.y[i])) {
                        continue;
                    }
                    const double px = tx(it.x[i]), py = ty(it.y[i]);
                    if (i < it.y_err.size() && std::isfinite(it.y_err[i]) && it.y_err[i] > 0.0) {
                        const double lo = it.y[i] - it.y_err[i], hi = it.y[i] + it.y_err[i];
                        if (ok_y(lo) && ok_y(hi)) {
                            out += "<line x1=\"" + f(px) + "\" y1=\"" + f(ty(lo)) + "\" x2=\"" +
                                   f(px) + "\" y2=\"" + f(ty(hi)) + "\" stroke=\"" +
                                   it.style.color + "\"/>\n";
                        }
                    }
                    if (i < it.x_err.size() && std::isfinite(it.x_err[i]) && it.x_err[i] > 0.0) {
                        const double lo = it.x[i] - it.x_err[i], hi = it.x[i] + it.x_err[i];
                        if (ok_x(lo) && ok_x(hi)) {
                            out += "<line x1=\"" + f(tx(lo)) + "\" y1=\"" + f(py) + "\" x2=\"" +
                                   f(tx(hi)) + "\" y2=\"" + f(py) + "\" stroke=\"" +
                                   it.style.color + "\"/>\n";
                        }
                    }
                    out += "<circle cx=\"" + f(px) + "\" cy=\"" + f(py) + "\" r=\"2.5\"/>\n";
                }
                out += "</g>\n";
                break;
            }
            case Kind::band: {
                std::string pts;
                for (std::size_t i = 0; i < it.x.size(); ++i) {
                    if (ok_x(it.x[i]) && ok_y(it.y[i])) {
                        pts += f(tx(it.x[i])) + "," + f(ty(it.y[i])) + " ";
                    }
                }
                for (std::size_t i = it.x.size(); i-- > 0;) {
                    if (ok_x(it.x[i]) && ok_y(it.y2[i])) {
                        pts += f(tx(it.x[i])) + "," + f(ty(it.y2[i])) + " ";
                    }
                }
                out += "<polygon " + cls + " fill=\"" + it.style.color + "\" fill-opacity=\"" +
                       f(it.style.opacity) + "\" stroke=\"none\" points=\"" + pts + "\"/>\n";
                break;
            }
            case Kind::arrow: {
                if (!ok_x(it.x[0]) || !ok_x(it.x[1]) || !ok_y(it.y[0]) || !ok_y(it.y[1])) {
                    break;
                }
                const double x0 = tx(it.x[0]), y0 = ty(it.y[0]);
                const double x1 = tx(it.x[1]), y1 = ty(it.y[1]);
                out += "<line " + cls + " x1=\"" + f(x0) + "\" y1=\"" + f(y0) + "\" x2=\"" +
                       f(x1) + "\" y2=\"" + f(y1) + "\" " + stroke(it.style) + "/>\n";
                const double ang = std::atan2(y1 - y0, x1 - x0);
                const double hx1 = x1 - 10 * std::cos(ang - 0.4), hy1 = y1 - 10 * std::sin(ang - 0.4);
                const double hx2 = x1 - 10 * std::cos(ang + 0.4), hy2 = y1 - 10 * std::sin(ang + 0.4);
                out += "<polygon " + cls + " fill=\"" + it.style.color + "\" points=\"" + f(x1) +
                       "," + f(y1) + " " + f(hx1) + "," + f(hy1) + " " + f(hx2) + "," + f(hy2) +
                       "\"/>\n";
                break;
            }
        }
    }
    out += "</g>\n";

    // Legend.
    double ly = oy + 16;
    for (const auto& it : items_) {
        if (it.label.empty()) {
            continue;
        }
        const double lx = ox + pw - 170;
        out += "<line x1=\"" + f(lx) + "\" y1=\"" + f(ly - 4) + "\" x2=\"" + f(lx + 20) +
               "\" y2=\"" + f(ly - 4) + "\" " + stroke(it.style) + "/>\n";
        out += "<text class=\"legend\" x=\"" + f(lx + 26) + "\" y=\"" + f(ly) +
               "\" font-family=\"sans-serif\" font-size=\"11\">" + xml_escape(it.label) +
               "</text>\n";
        ly += 16;
    }
    out += "</svg>\n";
    return out;
}

}  // namespace cryotherm::io
