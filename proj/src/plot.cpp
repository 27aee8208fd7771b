#include "culmark/plot.hpp"

#include "culmark/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

namespace culmark {

namespace {

std::string fixed(double x)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", x);
    return buf;
}

std::string escape_xml(const std::string& s)
{
    std::string out;
    for (const char c : s) {
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

std::string series_color(const std::string& condition, std::size_t ordinal)
{
    if (condition == "PI") return "#1f77b4";
    if (condition == "NPI") return "#ff7f0e";
    static const char* const palette[] = {"#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};
    return palette[ordinal % 6];
}

/// 1, 2 or 5 times a power of ten, giving roughly five ticks.
double tick_step(double span)
{
    const double raw = span / 5.0;
    const double mag = std::pow(10.0, std::floor(std::log10(raw)));
    const double norm = raw / mag;
    return (norm < 1.5 ? 1.0 : norm < 3.5 ? 2.0 : norm < 7.5 ? 5.0 : 10.0) * mag;
}

std::string tick_label(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", std::abs(v) < 1e-12 ? 0.0 : v);
    return buf;
}

} // namespace

std::string emit_plot_svg(std::span<const MetricSeries> series, const PlotStyle& style)
{
    double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin;
    double ymin = xmin, ymax = -xmin;
    std::size_t points = 0;
    for (const MetricSeries& s : series) {
        for (const MetricPoint& p : s.points) {
            xmin = std::min(xmin, p.index);
            xmax = std::max(xmax, p.index);
            ymin = std::min(ymin, p.value - p.se);
            ymax = std::max(ymax, p.value + p.se);
            ++points;
        }
    }
    if (points == 0) throw InvalidArgument("emit_plot_svg: nothing to plot");
    if (xmax - xmin < 1e-12) { xmin -= 1.0; xmax += 1.0; }
    if (ymax - ymin < 1e-12) { ymin -= 0.5; ymax += 0.5; }
    const double ypad = 0.05 * (ymax - ymin);
    ymin -= ypad;
    ymax += ypad;

    const double left = 70, right = 130, top = 40, bottom = 55;
    const double w = style.width, h = style.height;
    const double pw = w - left - right, ph = h - top - bottom;
    const auto sx = [&](double x) { return left + (x - xmin) / (xmax - xmin) * pw; };
    const auto sy = [&](double y) { return top + (ymax - y) / (ymax - ymin) * ph; };

    std::string out;
    out += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(style.width) + "\" height=\"" +
           std::to_string(style.height) + "\" viewBox=\"0 0 " + std::to_string(style.width) + ' ' +
           std::to_string(style.height) + "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    out += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    out += "<text x=\"" + fixed(w / 2) + "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">" + escape_xml(style.title) + "</text>\n";
    out += "<rect x=\"" + fixed(left) + "\" y=\"" + fixed(top) + "\" width=\"" + fixed(pw) + "\" height=\"" + fixed(ph) +
           "\" fill=\"none\" stroke=\"black\"/>\n";

    const double xs = tick_step(xmax - xmin);
    for (double t = std::ceil(xmin / xs) * xs; t <= xmax + 1e-9 * xs; t += xs) {
        out += "<line x1=\"" + fixed(sx(t)) + "\" y1=\"" + fixed(top + ph) + "\" x2=\"" + fixed(sx(t)) + "\" y2=\"" +
               fixed(top + ph + 5) + "\" stroke=\"black\"/>\n";
        out += "<text x=\"" + fixed(sx(t)) + "\" y=\"" + fixed(top + ph + 18) + "\" text-anchor=\"middle\">" + tick_label(t) + "</text>\n";
    }
    const double ys = tick_step(ymax - ymin);
    for (double t = std::ceil(ymin / ys) * ys; t <= ymax + 1e-9 * ys; t += ys) {
        out += "<line x1=\"" + fixed(left - 5) + "\" y1=\"" + fixed(sy(t)) + "\" x2=\"" + fixed(left) + "\" y2=\"" +
               fixed(sy(t)) + "\" stroke=\"black\"/>\n";
        out += "<text x=\"" + fixed(left - 8) + "\" y=\"" + fixed(sy(t) + 4) + "\" text-anchor=\"end\">" + tick_label(t) + "</text>\n";
    }
    out += "<text x=\"" + fixed(left + pw / 2) + "\" y=\"" + fixed(h - 12) + "\" text-anchor=\"middle\">" +
           escape_xml(style.x_label) + "</text>\n";
    out += "<text transform=\"translate(18," + fixed(top + ph / 2) + ") rotate(-90)\" text-anchor=\"middle\">" +
           escape_xml(style.y_label) + "</text>\n";

    std::size_t ordinal = 0;
    for (std::size_t i = 0; i < series.size(); ++i) {
        const MetricSeries& s = series[i];
        const std::string color = series_color(s.condition, ordinal);
        if (s.condition != "PI" && s.condition != "NPI") ++ordinal;
        out += "<g stroke=\"" + color + "\" fill=\"" + color + "\">\n";
        for (const MetricPoint& p : s.points) {
            if (p.se <= 0.0) continue;
            const double x = sx(p.index);
            out += "<line x1=\"" + fixed(x) + "\" y1=\"" + fixed(sy(p.value - p.se)) + "\" x2=\"" + fixed(x) + "\" y2=\"" +
                   fixed(sy(p.value + p.se)) + "\"/>\n";
        }
        if (s.points.size() >= 2) {
            out += "<polyline fill=\"none\" stroke-width=\"2\" points=\"";
            for (std::size_t k = 0; k < s.points.size(); ++k)
                out += (k ? " " : "") + fixed(sx(s.points[k].index)) + ',' + fixed(sy(s.points[k].value));
            out += "\"/>\n";
        }
        for (const MetricPoint& p : s.points)
            out += "<circle cx=\"" + fixed(sx(p.index)) + "\" cy=\"" + fixed(sy(p.value)) + "\" r=\"3\"/>\n";
        const double ly = top + 10 + 20.0 * static_cast<double>(i);
        out += "<line x1=\"" + fixed(left + pw + 12) + "\" y1=\"" + fixed(ly) + "\" x2=\"" + fixed(left + pw + 32) +
               "\" y2=\"" + fixed(ly) + "\" stroke-width=\"2\"/>\n";
        out += "<text x=\"" + fixed(left + pw + 38) + "\" y=\"" + fixed(ly + 4) + "\" stroke=\"none\">" +
               escape_xml(s.condition) + "</text>\n";
        out += "</g>\n";
    }
    out += "</svg>\n";
    return out;
}

} // namespace culmark
