#pragma once

// Minimal deterministic SVG line/scatter plots.

#include <string>
#include <vector>

namespace cryotherm::io {

struct SvgStyle {
    std::string color = "#1f77b4";
    double stroke_width = 1.5;
    bool dashed = false;
    double opacity = 1.0;
};

class SvgPlot {
public:
    SvgPlot(std::string title, std::string x_label, std::string y_label, double width = 640.0,
            double height = 480.0);

    void set_log_x(bool on) { log_x_ = on; }
    void set_log_y(bool on) { log_y_ = on; }
    /// Same scale on both axes (complex-plane plots).
    void set_equal_aspect(bool on) { equal_aspect_ = on; }

    void add_line(std::vector<double> x, std::vector<double> y, SvgStyle style,
                  std::string css_class = "line", std::string label = "");
    /// Markers with optional symmetric error bars (empty vectors for none).
    void add_points(std::vector<double> x, std::vector<double> y, SvgStyle style,
                    std::string css_class = "points", std::string label = "",
                    std::vector<double> y_err = {}, std::vector<double> x_err = {});
    /// Filled region between two curves.
    void add_band(std::vector<double> x, std::vector<double> y_low, std::vector<double> y_high,
                  SvgStyle style, std::string css_class = "band", std::string label = "");
    void add_arrow(double x0, double y0, double x1, double y1, SvgStyle style,
                   std::string css_class = "arrow", std::string label = "");

    std::string render() const;

private:
    enum class Kind { line, points, band, arrow };
    struct Item {
        Kind kind;
        std::vector<double> x, y, y2, y_err, x_err;
        SvgStyle style;
        std::string css_class;
        std::string label;
    };

    std::string title_, x_label_, y_label_;
    double width_, height_;
    bool log_x_ = false, log_y_ = false, equal_aspect_ = false;
    std::vector<Item> items_;
};

/// Escapes &, <, > and quotes for use in SVG text and attributes.
std::string xml_escape(const std::string& s);

}  // namespace cryotherm::io
