#include "uqt/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "uqt/error.hpp"

namespace uqt::svg {

namespace {

constexpr double kWidth = 720, kHeight = 420, kLeft = 70, kRight = 170, kTop = 40, kBottom = 50;

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

std::string label_num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", v);
    return buf;
}

std::string escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '&': out += "&amp;"; break;
            default: out += c;
        }
    }
    return out;
}

struct Frame {
    double x0, x1, y0, y1;
    double px(double x) const { return kLeft + (x - x0) / (x1 - x0) * (kWidth - kLeft - kRight); }
    double py(double y) const { return kHeight - kBottom - (y - y0) / (y1 - y0) * (kHeight - kTop - kBottom); }
};

void widen(double& lo, double& hi) {
    if (!(lo < hi)) {
        lo -= 0.5;
        hi += 0.5;
    }
}

void axes(std::ostringstream& out, const Frame& f, const std::string& title, const std::string& xl, const std::string& yl,
          bool x_ticks = true) {
    out << "<text x=\"" << num(kWidth / 2) << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">" << escape(title) << "</text>\n";
    out << "<line x1=\"" << num(kLeft) << "\" y1=\"" << num(kHeight - kBottom) << "\" x2=\"" << num(kWidth - kRight) << "\" y2=\""
        << num(kHeight - kBottom) << "\" stroke=\"black\"/>\n";
    out << "<line x1=\"" << num(kLeft) << "\" y1=\"" << num(kTop) << "\" x2=\"" << num(kLeft) << "\" y2=\"" << num(kHeight - kBottom)
        << "\" stroke=\"black\"/>\n";
    for (int i = 0; i <= 4; ++i) {
        const double yv = f.y0 + (f.y1 - f.y0) * i / 4.0;
        out << "<text x=\"" << num(kLeft - 6) << "\" y=\"" << num(f.py(yv) + 4) << "\" text-anchor=\"end\" font-size=\"11\">"
            << label_num(yv) << "</text>\n";
        if (x_ticks) {
            const double xv = f.x0 + (f.x1 - f.x0) * i / 4.0;
            out << "<text x=\"" << num(f.px(xv)) << "\" y=\"" << num(kHeight - kBottom + 16)
                << "\" text-anchor=\"middle\" font-size=\"11\">" << label_num(xv) << "</text>\n";
        }
    }
    out << "<text x=\"" << num((kLeft + kWidth - kRight) / 2) << "\" y=\"" << num(kHeight - 10)
        << "\" text-anchor=\"middle\" font-size=\"12\">" << escape(xl) << "</text>\n";
    out << "<text x=\"16\" y=\"" << num(kHeight / 2) << "\" font-size=\"12\" transform=\"rotate(-90 16 " << num(kHeight / 2)
        << ")\" text-anchor=\"middle\">" << escape(yl) << "</text>\n";
}

std::string header() {
    return "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(kWidth) + "\" height=\"" + num(kHeight) +
           "\" font-family=\"sans-serif\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
}

}  // namespace

std::string line_chart(const std::string& title, const std::string& x_label, const std::string& y_label,
                       const std::vector<Series>& series, const std::vector<Band>& bands) {
    double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
    auto extend = [&](const std::vector<double>& xs, const std::vector<double>& ys) {
        for (double x : xs) x0 = std::min(x0, x), x1 = std::max(x1, x);
        for (double y : ys)
            if (std::isfinite(y)) y0 = std::min(y0, y), y1 = std::max(y1, y);
    };
    for (const auto& s : series) extend(s.x, s.y);
    for (const auto& b : bands) extend(b.x, b.lower), extend(b.x, b.upper);
    if (!std::isfinite(x0)) x0 = 0, x1 = 1, y0 = 0, y1 = 1;
    widen(x0, x1);
    widen(y0, y1);
    const Frame f{x0, x1, y0, y1};

    std::ostringstream out;
    out << header();
    axes(out, f, title, x_label, y_label);
    for (const auto& b : bands) {
        out << "<polygon fill=\"" << b.colour << "\" fill-opacity=\"0.25\" stroke=\"none\" points=\"";
        for (std::size_t i = 0; i < b.x.size(); ++i) out << num(f.px(b.x[i])) << ',' << num(f.py(std::clamp(b.upper[i], y0, y1))) << ' ';
        for (std::size_t i = b.x.size(); i-- > 0;) out << num(f.px(b.x[i])) << ',' << num(f.py(std::clamp(b.lower[i], y0, y1))) << ' ';
        out << "\"/>\n";
    }
    for (std::size_t k = 0; k < series.size(); ++k) {
        const auto& s = series[k];
        out << "<polyline fill=\"none\" stroke=\"" << s.colour << "\" stroke-width=\"1.6\""
            << (s.dashed ? " stroke-dasharray=\"5,4\"" : "") << " points=\"";
        for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) out << num(f.px(s.x[i])) << ',' << num(f.py(s.y[i])) << ' ';
        out << "\"/>\n";
        const double ly = kTop + 18.0 * static_cast<double>(k);
        out << "<line x1=\"" << num(kWidth - kRight + 10) << "\" y1=\"" << num(ly) << "\" x2=\"" << num(kWidth - kRight + 30)
            << "\" y2=\"" << num(ly) << "\" stroke=\"" << s.colour << "\" stroke-width=\"2\"/>\n";
        out << "<text x=\"" << num(kWidth - kRight + 34) << "\" y=\"" << num(ly + 4) << "\" font-size=\"11\">" << escape(s.label)
            << "</text>\n";
    }
    out << "</svg>\n";
    return out.str();
}

std::string box_plot(const std::string& title, const std::string& y_label, const std::vector<BoxGroup>& groups,
                     double reference_line) {
    double y0 = reference_line, y1 = reference_line;
    for (const auto& g : groups)
        for (double v : g.values) y0 = std::min(y0, v), y1 = std::max(y1, v);
    const double pad = 0.05 * std::max(y1 - y0, 0.01);
    y0 -= pad;
    y1 += pad;
    const double n = static_cast<double>(std::max<std::size_t>(groups.size(), 1));
    const Frame f{0.0, n, y0, y1};

    std::ostringstream out;
    out << header();
    axes(out, f, title, "", y_label, false);
    out << "<line x1=\"" << num(kLeft) << "\" y1=\"" << num(f.py(reference_line)) << "\" x2=\"" << num(kWidth - kRight)
        << "\" y2=\"" << num(f.py(reference_line)) << "\" stroke=\"red\" stroke-dasharray=\"6,4\"/>\n";
    for (std::size_t k = 0; k < groups.size(); ++k) {
        auto v = groups[k].values;
        const double cx = f.px(static_cast<double>(k) + 0.5);
        out << "<text x=\"" << num(cx) << "\" y=\"" << num(kHeight - kBottom + 16) << "\" text-anchor=\"middle\" font-size=\"11\">"
            << escape(groups[k].label) << "</text>\n";
        if (v.empty()) continue;
        std::sort(v.begin(), v.end());
        auto q = [&](double p) {
            const double pos = p * static_cast<double>(v.size() - 1);
            const auto lo = static_cast<std::size_t>(std::floor(pos));
            const auto hi = std::min(lo + 1, v.size() - 1);
            return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
        };
        const double q1 = q(0.25), med = q(0.5), q3 = q(0.75);
        const double half = 0.25 * (f.px(1.0) - f.px(0.0));
        out << "<line x1=\"" << num(cx) << "\" y1=\"" << num(f.py(v.front())) << "\" x2=\"" << num(cx) << "\" y2=\""
            << num(f.py(v.back())) << "\" stroke=\"black\"/>\n";
        out << "<rect x=\"" << num(cx - half) << "\" y=\"" << num(f.py(q3)) << "\" width=\"" << num(2 * half) << "\" height=\""
            << num(std::max(f.py(q1) - f.py(q3), 0.5)) << "\" fill=\"#9ecae1\" stroke=\"black\"/>\n";
        out << "<line x1=\"" << num(cx - half) << "\" y1=\"" << num(f.py(med)) << "\" x2=\"" << num(cx + half) << "\" y2=\""
            << num(f.py(med)) << "\" stroke=\"black\" stroke-width=\"2\"/>\n";
    }
    out << "</svg>\n";
    return out.str();
}

void write(const std::filesystem::path& path, const std::string& document) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path.string());
    out << document;
}

}  // namespace uqt::svg
