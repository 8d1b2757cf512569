#include "airdyn/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

namespace airdyn::svg {

namespace {

constexpr double kLeft = 70, kRight = 20, kTop = 40, kBottom = 55;

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

std::string tick_label(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4g", std::abs(v) < 1e-12 ? 0.0 : v);
    return buf;
}

double nice_step(double span) {
    if (!(span > 0.0)) return 1.0;
    const double raw = span / 6.0;
    const double mag = std::pow(10.0, std::floor(std::log10(raw)));
    for (double f : {1.0, 2.0, 5.0, 10.0})
        if (raw <= f * mag) return f * mag;
    return 10.0 * mag;
}

}  // namespace

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

Plot::Plot(std::string title, std::string xlabel, std::string ylabel, int width, int height)
    : title_(std::move(title)), xlabel_(std::move(xlabel)), ylabel_(std::move(ylabel)), width_(width), height_(height) {}

void Plot::line(const std::vector<double>& x, const std::vector<double>& y, const std::string& color,
                const std::string& label, double stroke, bool dashed) {
    series_.push_back({x, y, color, label, stroke, dashed, true, false});
}

void Plot::markers(const std::vector<double>& x, const std::vector<double>& y, const std::string& color,
                   const std::string& label, double radius, bool hollow) {
    series_.push_back({x, y, color, label, radius, false, false, hollow});
}

void Plot::arrow(double x0, double y0, double x1, double y1, const std::string& color) {
    arrows_.push_back({x0, y0, x1, y1, color});
}

void Plot::set_range(double xmin, double xmax, double ymin, double ymax) {
    fixed_ = true;
    xmin_ = xmin;
    xmax_ = xmax;
    ymin_ = ymin;
    ymax_ = ymax;
}

std::string Plot::render() const {
    double x0 = xmin_, x1 = xmax_, y0 = ymin_, y1 = ymax_;
    if (!fixed_) {
        x0 = y0 = std::numeric_limits<double>::infinity();
        x1 = y1 = -std::numeric_limits<double>::infinity();
        for (const auto& s : series_) {
            for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
                if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
                x0 = std::min(x0, s.x[i]);
                x1 = std::max(x1, s.x[i]);
                y0 = std::min(y0, s.y[i]);
                y1 = std::max(y1, s.y[i]);
            }
        }
        if (!std::isfinite(x0)) x0 = 0, x1 = 1, y0 = 0, y1 = 1;
        if (x1 - x0 < 1e-12) x0 -= 0.5, x1 += 0.5;
        if (y1 - y0 < 1e-12) y0 -= 0.5, y1 += 0.5;
        const double pad = 0.05 * (y1 - y0);
        y0 -= pad;
        y1 += pad;
    }
    const double pw = width_ - kLeft - kRight, ph = height_ - kTop - kBottom;
    auto sx = [&](double x) { return kLeft + (x - x0) / (x1 - x0) * pw; };
    auto sy = [&](double y) { return kTop + (y1 - y) / (y1 - y0) * ph; };
    auto inside = [&](double x, double y) { return x >= x0 && x <= x1 && y >= y0 && y <= y1; };

    std::ostringstream o;
    o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width_ << "\" height=\"" << height_
      << "\" viewBox=\"0 0 " << width_ << ' ' << height_ << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    o << "<text x=\"" << width_ / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">" << escape(title_)
      << "</text>\n";
    o << "<defs><clipPath id=\"plot\"><rect x=\"" << num(kLeft) << "\" y=\"" << num(kTop) << "\" width=\"" << num(pw)
      << "\" height=\"" << num(ph) << "\"/></clipPath></defs>\n";

    const double xs = nice_step(x1 - x0), ys = nice_step(y1 - y0);
    for (double t = std::ceil(x0 / xs) * xs; t <= x1 + 1e-9 * xs; t += xs) {
        o << "<line x1=\"" << num(sx(t)) << "\" y1=\"" << num(kTop) << "\" x2=\"" << num(sx(t)) << "\" y2=\""
          << num(kTop + ph) << "\" stroke=\"#e5e5e5\"/>\n";
        o << "<text x=\"" << num(sx(t)) << "\" y=\"" << num(kTop + ph + 16) << "\" text-anchor=\"middle\">"
          << tick_label(t) << "</text>\n";
    }
    for (double t = std::ceil(y0 / ys) * ys; t <= y1 + 1e-9 * ys; t += ys) {
        o << "<line x1=\"" << num(kLeft) << "\" y1=\"" << num(sy(t)) << "\" x2=\"" << num(kLeft + pw) << "\" y2=\""
          << num(sy(t)) << "\" stroke=\"#e5e5e5\"/>\n";
        o << "<text x=\"" << num(kLeft - 6) << "\" y=\"" << num(sy(t) + 4) << "\" text-anchor=\"end\">"
          << tick_label(t) << "</text>\n";
    }
    o << "<rect x=\"" << num(kLeft) << "\" y=\"" << num(kTop) << "\" width=\"" << num(pw) << "\" height=\"" << num(ph)
      << "\" fill=\"none\" stroke=\"black\"/>\n";
    o << "<text x=\"" << num(kLeft + pw / 2) << "\" y=\"" << height_ - 12 << "\" text-anchor=\"middle\">"
      << escape(xlabel_) << "</text>\n";
    o << "<text transform=\"translate(16," << num(kTop + ph / 2) << ") rotate(-90)\" text-anchor=\"middle\">"
      << escape(ylabel_) << "</text>\n";

    o << "<g clip-path=\"url(#plot)\">\n";
    for (const auto& a : arrows_) {
        if (!inside(a.x0, a.y0)) continue;
        const double ax = sx(a.x0), ay = sy(a.y0), bx = sx(a.x1), by = sy(a.y1);
        const double ang = std::atan2(by - ay, bx - ax), len = 4.0;
        o << "<path d=\"M" << num(ax) << ',' << num(ay) << " L" << num(bx) << ',' << num(by) << " M"
          << num(bx - len * std::cos(ang - 0.5)) << ',' << num(by - len * std::sin(ang - 0.5)) << " L" << num(bx)
          << ',' << num(by) << " L" << num(bx - len * std::cos(ang + 0.5)) << ','
          << num(by - len * std::sin(ang + 0.5)) << "\" stroke=\"" << a.color << "\" fill=\"none\" stroke-width=\"0.8\"/>\n";
    }
    for (const auto& s : series_) {
        if (s.is_line) {
            o << "<polyline fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"" << num(s.size) << '"';
            if (s.dashed) o << " stroke-dasharray=\"6,4\"";
            o << " points=\"";
            for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
                if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
                o << num(sx(s.x[i])) << ',' << num(sy(s.y[i])) << ' ';
            }
            o << "\"/>\n";
        } else {
            for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
                if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
                o << "<circle cx=\"" << num(sx(s.x[i])) << "\" cy=\"" << num(sy(s.y[i])) << "\" r=\"" << num(s.size)
                  << "\" " << (s.hollow ? "fill=\"white\" stroke=\"" + s.color + "\"" : "fill=\"" + s.color + "\"")
                  << "/>\n";
            }
        }
    }
    o << "</g>\n";

    int row = 0;
    for (const auto& s : series_) {
        if (s.label.empty()) continue;
        const double ly = kTop + 14 + 16 * row++;
        const double lx = kLeft + pw - 170;
        if (s.is_line) {
            o << "<line x1=\"" << num(lx) << "\" y1=\"" << num(ly - 4) << "\" x2=\"" << num(lx + 22) << "\" y2=\""
              << num(ly - 4) << "\" stroke=\"" << s.color << "\" stroke-width=\"2\"" << (s.dashed ? " stroke-dasharray=\"6,4\"" : "")
              << "/>\n";
        } else {
            o << "<circle cx=\"" << num(lx + 11) << "\" cy=\"" << num(ly - 4) << "\" r=\"4\" fill=\"" << s.color
              << "\"/>\n";
        }
        o << "<text x=\"" << num(lx + 28) << "\" y=\"" << num(ly) << "\">" << escape(s.label) << "</text>\n";
    }
    o << "</svg>\n";
    return o.str();
}

}  // namespace airdyn::svg
