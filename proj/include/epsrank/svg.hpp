#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace epsrank {

/* Malformed trajectory file, carrying the 1-based line it was found on;
 * line 0 means the file as a whole (unreadable, or no data rows). */
struct CsvError : std::runtime_error {
    std::size_t line;
    CsvError(std::size_t ln, const std::string& msg)
        : std::runtime_error(ln ? "csv line " + std::to_string(ln) + ": " + msg
                                : "csv: " + msg),
          line(ln) {}
};

struct TrajectoryData {
    std::string label;
    std::vector<double> iterations;
    std::vector<double> losses;
    std::vector<double> ranks; // last-layer eps-rank per record
};

namespace detail {

inline std::string path_stem(const std::string& path) {
    const std::size_t slash = path.find_last_of("/\\");
    std::string base = (slash == std::string::npos) ? path : path.substr(slash + 1);
    const std::size_t dot = base.find_last_of('.');
    if (dot != std::string::npos && dot > 0) base.erase(dot);
    return base;
}

inline double parse_csv_real(const std::string& tok, std::size_t line, const char* what) {
    char* end = nullptr;
    const double v = std::strtod(tok.c_str(), &end);
    if (tok.empty() || end != tok.c_str() + tok.size() || !std::isfinite(v))
        throw CsvError(line, std::string("bad ") + what + " value: '" + tok + "'");
    return v;
}

inline std::string fmt2(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

// largest of {1, 2, 5} x 10^k not exceeding `raw`; raw > 0
inline double nice_step(double raw) {
    const double mag = std::pow(10.0, std::floor(std::log10(raw)));
    const double r = raw / mag;
    if (r >= 5.0) return 5.0 * mag;
    if (r >= 2.0) return 2.0 * mag;
    return mag;
}

} // namespace detail

/* Read one trajectory CSV written by the trainer: header
 * iteration,loss,eps_rank[,rank_layer_k...], one record per line, trailing
 * '#' comment lines (abort markers) ignored. Extra columns are ignored for
 * plotting. The label defaults to the file name without its extension. */
inline TrajectoryData read_trajectory_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw CsvError(0, "cannot open " + path);
    TrajectoryData t;
    t.label = detail::path_stem(path);
    std::string line;
    std::size_t lineno = 0;
    bool saw_header = false;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line.front() == '#') continue;
        if (!saw_header) {
            if (line.rfind("iteration,loss,eps_rank", 0) != 0)
                throw CsvError(lineno, "expected header iteration,loss,eps_rank");
            saw_header = true;
            continue;
        }
        std::vector<std::string> cells;
        std::istringstream row(line);
        std::string cell;
        while (std::getline(row, cell, ',')) cells.push_back(cell);
        if (cells.size() < 3) throw CsvError(lineno, "expected at least 3 columns");
        t.iterations.push_back(detail::parse_csv_real(cells[0], lineno, "iteration"));
        t.losses.push_back(detail::parse_csv_real(cells[1], lineno, "loss"));
        t.ranks.push_back(detail::parse_csv_real(cells[2], lineno, "eps_rank"));
    }
    if (!saw_header) throw CsvError(0, "no header in " + path);
    if (t.iterations.empty()) throw CsvError(0, "no records in " + path);
    return t;
}

/* Render trajectories as a dual-axis SVG: loss as a line on a log left
 * axis, eps-rank as open-circle scatter on a linear right axis, with a
 * legend when more than one trajectory is shown. Output bytes depend only
 * on the input data, so renders are byte-stable for golden comparisons. */
inline std::string render_plot_svg(const std::vector<TrajectoryData>& trajs) {
    if (trajs.empty()) throw std::invalid_argument("render_plot_svg: no trajectories");
    static const char* kPalette[6] = {"#1a1a1a", "#c0392b", "#2471a3",
                                      "#1e8449", "#8e44ad", "#d68910"};
    const double w = 960.0, h = 540.0;
    const double ml = 76.0, mr = 76.0, mt = 40.0, mb = 56.0;
    const double pw = w - ml - mr, ph = h - mt - mb;

    double xmax = 0.0, rmax = 0.0;
    double lmin = 1e300, lmax = 0.0;
    for (const TrajectoryData& t : trajs) {
        for (double it : t.iterations) xmax = std::max(xmax, it);
        for (double r : t.ranks) rmax = std::max(rmax, r);
        for (double l : t.losses) {
            if (l > 0.0) {
                lmin = std::min(lmin, l);
                lmax = std::max(lmax, l);
            }
        }
    }
    if (xmax <= 0.0) xmax = 1.0;
    if (rmax <= 0.0) rmax = 1.0;
    if (lmax <= 0.0) { // all losses were zero: show one flat decade
        lmin = 1e-1;
        lmax = 1.0;
    }
    double dlo = std::floor(std::log10(lmin));
    double dhi = std::ceil(std::log10(lmax));
    if (dhi <= dlo) dhi = dlo + 1.0;
    const double log_floor = std::pow(10.0, dlo);

    auto xpix = [&](double it) { return ml + pw * (it / xmax); };
    auto ypix_loss = [&](double l) {
        const double ll = std::log10(std::max(l, log_floor));
        return mt + ph * (1.0 - (ll - dlo) / (dhi - dlo));
    };
    auto ypix_rank = [&](double r) { return mt + ph * (1.0 - r / rmax); };

    std::ostringstream o;
    o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"960\" height=\"540\" "
         "viewBox=\"0 0 960 540\">\n"
      << "<title>loss and eps-rank trajectories</title>\n"
      << "<rect x=\"0\" y=\"0\" width=\"960\" height=\"540\" fill=\"#ffffff\"/>\n"
      << "<rect x=\"" << detail::fmt2(ml) << "\" y=\"" << detail::fmt2(mt) << "\" width=\""
      << detail::fmt2(pw) << "\" height=\"" << detail::fmt2(ph)
      << "\" fill=\"none\" stroke=\"#444444\" stroke-width=\"1\"/>\n";

    // x ticks: nice steps over [0, xmax]
    const double xstep = detail::nice_step(xmax / 5.0);
    for (double tx = 0.0; tx <= xmax + 1e-9 * xmax; tx += xstep) {
        const double px = xpix(tx);
        o << "<line x1=\"" << detail::fmt2(px) << "\" y1=\"" << detail::fmt2(mt + ph)
          << "\" x2=\"" << detail::fmt2(px) << "\" y2=\"" << detail::fmt2(mt + ph + 5)
          << "\" stroke=\"#444444\"/>\n"
          << "<text x=\"" << detail::fmt2(px) << "\" y=\"" << detail::fmt2(mt + ph + 20)
          << "\" font-family=\"monospace\" font-size=\"12\" text-anchor=\"middle\">"
          << static_cast<long long>(tx + 0.5) << "</text>\n";
    }
    o << "<text x=\"" << detail::fmt2(ml + pw / 2.0) << "\" y=\"" << detail::fmt2(h - 12)
      << "\" font-family=\"monospace\" font-size=\"13\" text-anchor=\"middle\">iteration"
         "</text>\n";

    // left axis: loss decades
    const int decades = static_cast<int>(dhi - dlo);
    const int dstep = (decades > 8) ? (decades + 7) / 8 : 1;
    for (int k = 0; k <= decades; k += dstep) {
        const double lv = std::pow(10.0, dlo + k);
        const double py = ypix_loss(lv);
        o << "<line x1=\"" << detail::fmt2(ml - 5) << "\" y1=\"" << detail::fmt2(py)
          << "\" x2=\"" << detail::fmt2(ml) << "\" y2=\"" << detail::fmt2(py)
          << "\" stroke=\"#444444\"/>\n"
          << "<text x=\"" << detail::fmt2(ml - 9) << "\" y=\"" << detail::fmt2(py + 4)
          << "\" font-family=\"monospace\" font-size=\"12\" text-anchor=\"end\">1e"
          << static_cast<int>(dlo) + k << "</text>\n";
    }
    o << "<text x=\"18\" y=\"" << detail::fmt2(mt + ph / 2.0)
      << "\" font-family=\"monospace\" font-size=\"13\" text-anchor=\"middle\" "
         "transform=\"rotate(-90 18 "
      << detail::fmt2(mt + ph / 2.0) << ")\">loss</text>\n";

    // right axis: rank, integer ticks
    const double rstep = std::max(1.0, detail::nice_step(rmax / 5.0));
    for (double rv = 0.0; rv <= rmax + 1e-9; rv += rstep) {
        const double py = ypix_rank(rv);
        o << "<line x1=\"" << detail::fmt2(ml + pw) << "\" y1=\"" << detail::fmt2(py)
          << "\" x2=\"" << detail::fmt2(ml + pw + 5) << "\" y2=\"" << detail::fmt2(py)
          << "\" stroke=\"#444444\"/>\n"
          << "<text x=\"" << detail::fmt2(ml + pw + 9) << "\" y=\"" << detail::fmt2(py + 4)
          << "\" font-family=\"monospace\" font-size=\"12\">"
          << static_cast<long long>(rv + 0.5) << "</text>\n";
    }
    o << "<text x=\"" << detail::fmt2(w - 16) << "\" y=\"" << detail::fmt2(mt + ph / 2.0)
      << "\" font-family=\"monospace\" font-size=\"13\" text-anchor=\"middle\" "
         "transform=\"rotate(90 "
      << detail::fmt2(w - 16) << " " << detail::fmt2(mt + ph / 2.0) << ")\">eps-rank</text>\n";

    for (std::size_t k = 0; k < trajs.size(); ++k) {
        const TrajectoryData& t = trajs[k];
        const char* color = kPalette[k % 6];
        o << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
        for (std::size_t i = 0; i < t.iterations.size(); ++i) {
            if (i) o << " ";
            o << detail::fmt2(xpix(t.iterations[i])) << "," << detail::fmt2(ypix_loss(t.losses[i]));
        }
        o << "\"/>\n";
        for (std::size_t i = 0; i < t.iterations.size(); ++i)
            o << "<circle cx=\"" << detail::fmt2(xpix(t.iterations[i])) << "\" cy=\""
              << detail::fmt2(ypix_rank(t.ranks[i]))
              << "\" r=\"2.5\" fill=\"none\" stroke=\"" << color << "\"/>\n";
    }

    if (trajs.size() > 1) {
        const double lx = ml + 12.0, ly = mt + 10.0;
        o << "<rect x=\"" << detail::fmt2(lx - 6) << "\" y=\"" << detail::fmt2(ly - 4)
          << "\" width=\"180\" height=\"" << detail::fmt2(18.0 * trajs.size() + 8)
          << "\" fill=\"#ffffff\" stroke=\"#444444\" stroke-width=\"0.5\"/>\n";
        for (std::size_t k = 0; k < trajs.size(); ++k) {
            const double ry = ly + 18.0 * k;
            const char* color = kPalette[k % 6];
            o << "<line x1=\"" << detail::fmt2(lx) << "\" y1=\"" << detail::fmt2(ry + 6)
              << "\" x2=\"" << detail::fmt2(lx + 22) << "\" y2=\"" << detail::fmt2(ry + 6)
              << "\" stroke=\"" << color << "\" stroke-width=\"1.5\"/>\n"
              << "<circle cx=\"" << detail::fmt2(lx + 11) << "\" cy=\"" << detail::fmt2(ry + 6)
              << "\" r=\"2.5\" fill=\"none\" stroke=\"" << color << "\"/>\n"
              << "<text x=\"" << detail::fmt2(lx + 30) << "\" y=\"" << detail::fmt2(ry + 10)
              << "\" font-family=\"monospace\" font-size=\"12\">" << trajs[k].label
              << "</text>\n";
        }
    }
    o << "</svg>\n";
    return o.str();
}

} // namespace epsrank
