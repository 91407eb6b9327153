#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>
#include <utility>
#include <vector>

#include "tvulog/io.hpp"

namespace tvulog {

// Minimal SVG assembly: fixed pixel coordinates, shortest round-trip number
// formatting so identical inputs produce byte-identical files.
class SvgCanvas {
  public:
    SvgCanvas(double width, double height) : w_(width), h_(height) {}

    void rect(double x, double y, double w, double h, const std::string& fill,
              double opacity = 1.0, const std::string& stroke = "", double stroke_width = 0.0) {
        body_ += "<rect x=\"" + num(x) + "\" y=\"" + num(y) + "\" width=\"" + num(w) +
                 "\" height=\"" + num(h) + "\" fill=\"" + fill + "\"";
        if (opacity != 1.0) body_ += " fill-opacity=\"" + num(opacity) + "\"";
        if (!stroke.empty())
            body_ += " stroke=\"" + stroke + "\" stroke-width=\"" + num(stroke_width) + "\"";
        body_ += "/>\n";
    }

    void line(double x1, double y1, double x2, double y2, const std::string& stroke,
              double width = 1.0, const std::string& dash = "") {
        body_ += "<line x1=\"" + num(x1) + "\" y1=\"" + num(y1) + "\" x2=\"" + num(x2) +
                 "\" y2=\"" + num(y2) + "\" stroke=\"" + stroke + "\" stroke-width=\"" +
                 num(width) + "\"";
        if (!dash.empty()) body_ += " stroke-dasharray=\"" + dash + "\"";
        body_ += "/>\n";
    }

    void polyline(const std::vector<std::pair<double, double>>& pts, const std::string& stroke,
                  double width = 1.0, const std::string& dash = "") {
        if (pts.empty()) return;
        body_ += "<polyline fill=\"none\" stroke=\"" + stroke + "\" stroke-width=\"" + num(width) +
                 "\"";
        if (!dash.empty()) body_ += " stroke-dasharray=\"" + dash + "\"";
        body_ += " points=\"";
        for (std::size_t p = 0; p < pts.size(); ++p) {
            if (p) body_ += " ";
            body_ += num(pts[p].first) + "," + num(pts[p].second);
        }
        body_ += "\"/>\n";
    }

    void circle(double cx, double cy, double r, const std::string& stroke, double width = 1.0,
                const std::string& fill = "none") {
        body_ += "<circle cx=\"" + num(cx) + "\" cy=\"" + num(cy) + "\" r=\"" + num(r) +
                 "\" fill=\"" + fill + "\" stroke=\"" + stroke + "\" stroke-width=\"" +
                 num(width) + "\"/>\n";
    }

    void text(double x, double y, const std::string& s, double size = 12.0,
              const std::string& anchor = "start", const std::string& fill = "#000000") {
        body_ += "<text x=\"" + num(x) + "\" y=\"" + num(y) + "\" font-size=\"" + num(size) +
                 "\" font-family=\"sans-serif\" text-anchor=\"" + anchor + "\" fill=\"" + fill +
                 "\">" + escape(s) + "</text>\n";
    }

    std::string finish() const {
        return "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<svg xmlns=\"http://www.w3.org/2000/"
               "svg\" width=\"" +
               num(w_) + "\" height=\"" + num(h_) + "\" viewBox=\"0 0 " + num(w_) + " " + num(h_) +
               "\">\n" + body_ + "</svg>\n";
    }

    static std::string num(double v) { return detail::format_double(v); }

    static std::string escape(const std::string& s) {
        std::string out;
        for (char c : s) {
            if (c == '&') out += "&amp;";
            else if (c == '<') out += "&lt;";
            else if (c == '>') out += "&gt;";
            else out += c;
        }
        return out;
    }

    // Grayscale hex color for v in [0,1] (0 = black).
    static std::string gray(double v) {
        int g = int(std::lround(255.0 * std::min(std::max(v, 0.0), 1.0)));
        char buf[8];
        std::snprintf(buf, sizeof buf, "#%02x%02x%02x", g, g, g);
        return buf;
    }

  private:
    double w_, h_;
    std::string body_;
};

}  // namespace tvulog
