#pragma once

#include <string>
#include <vector>

namespace airdyn::svg {

/// Minimal 2-D chart writer: axes with ticks, polylines, markers, arrows, legend.
class Plot {
public:
    Plot(std::string title, std::string xlabel, std::string ylabel, int width = 720, int height = 480);

    void line(const std::vector<double>& x, const std::vector<double>& y, const std::string& color,
              const std::string& label = "", double stroke = 1.5, bool dashed = false);
    void markers(const std::vector<double>& x, const std::vector<double>& y, const std::string& color,
                 const std::string& label = "", double radius = 3.0, bool hollow = false);
    void arrow(double x0, double y0, double x1, double y1, const std::string& color);
    /// Fixes the data range instead of fitting it to the content.
    void set_range(double xmin, double xmax, double ymin, double ymax);

    std::string render() const;

private:
    struct Series {
        std::vector<double> x, y;
        std::string color, label;
        double size;
        bool dashed;
        bool is_line;
        bool hollow;
    };
    struct Arrow {
        double x0, y0, x1, y1;
        std::string color;
    };

    std::string title_, xlabel_, ylabel_;
    int width_, height_;
    bool fixed_ = false;
    double xmin_ = 0, xmax_ = 1, ymin_ = 0, ymax_ = 1;
    std::vector<Series> series_;
    std::vector<Arrow> arrows_;
};

std::string escape(const std::string& s);

}  // namespace airdyn::svg
