// plot.hpp
//
// Minimal SVG line chart for series.csv columns: per-round mean across runs
// with an empirical 97.5% band, optionally smoothed by a centered moving
// average (the band is smoothed with the same window).
#pragma once
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "mtbai/errors.hpp"
#include "mtbai/format.hpp"

namespace mtbai {

namespace detail {

inline double empirical_quantile(std::vector<double> v, double p) {
    std::sort(v.begin(), v.end());
    if (v.size() == 1) return v[0];
    const double pos = p * (v.size() - 1);
    const size_t lo = static_cast<size_t>(pos);
    const size_t hi = std::min(lo + 1, v.size() - 1);
    const double frac = pos - lo;
    return v[lo] * (1.0 - frac) + v[hi] * frac;
}

inline std::vector<double> moving_average(const std::vector<double>& v, int window) {
    if (window <= 1 || v.size() < 2) return v;
    std::vector<double> out(v.size());
    const int half = window / 2;
    for (int i = 0; i < static_cast<int>(v.size()); ++i) {
        const int lo = std::max(0, i - half);
        const int hi = std::min(static_cast<int>(v.size()) - 1, i + half);
        double s = 0.0;
        for (int j = lo; j <= hi; ++j) s += v[j];
        out[i] = s / (hi - lo + 1);
    }
    return out;
}

} // namespace detail

// Renders mean +/- empirical 97.5% band of the chosen column against t.
inline void plot_series(const std::string& series_csv, const std::string& column,
                        const std::string& out_svg, int window = 51) {
    if (window < 1) throw usage_error("window must be >= 1");
    const CsvTable table = read_csv(series_csv);
    const int tcol = table.column("t");
    if (tcol < 0) throw config_error(series_csv + ": missing column \"t\"");
    const int col = table.column(column);
    if (col < 0) throw usage_error("unknown series column \"" + column + "\"");

    std::map<std::int64_t, std::vector<double>> by_t;
    for (const auto& row : table.rows)
        by_t[parse_int(row[tcol], series_csv)].push_back(parse_double(row[col], series_csv));

    std::vector<double> ts, mean, lo, hi;
    for (const auto& [t, vals] : by_t) {
        double s = 0.0;
        for (double v : vals) s += v;
        ts.push_back(static_cast<double>(t));
        mean.push_back(s / vals.size());
        lo.push_back(detail::empirical_quantile(vals, 0.0125));
        hi.push_back(detail::empirical_quantile(vals, 0.9875));
    }
    mean = detail::moving_average(mean, window);
    lo = detail::moving_average(lo, window);
    hi = detail::moving_average(hi, window);

    const double W = 800, H = 480, ml = 70, mr = 20, mt = 40, mb = 50;
    double xmin = 0, xmax = 1, ymin = 0, ymax = 1;
    if (!ts.empty()) {
        xmin = ts.front();
        xmax = std::max(ts.back(), xmin + 1);
        ymin = *std::min_element(lo.begin(), lo.end());
        ymax = *std::max_element(hi.begin(), hi.end());
        const double pad = std::max((ymax - ymin) * 0.05, 1e-12);
        ymin -= pad;
        ymax += pad;
    }
    auto sx = [&](double t) { return ml + (t - xmin) / (xmax - xmin) * (W - ml - mr); };
    auto sy = [&](double v) { return H - mb - (v - ymin) / (ymax - ymin) * (H - mt - mb); };

    std::ofstream out(out_svg);
    if (!out) throw std::runtime_error("cannot write SVG file: " + out_svg);
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
        << "\" viewBox=\"0 0 " << W << ' ' << H << "\">\n"
        << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
        << "<text x=\"" << W / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"16\">"
        << column << "</text>\n";

    // axes with a few tick labels
    out << "<line x1=\"" << ml << "\" y1=\"" << H - mb << "\" x2=\"" << W - mr << "\" y2=\""
        << H - mb << "\" stroke=\"black\"/>\n"
        << "<line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml << "\" y2=\"" << H - mb
        << "\" stroke=\"black\"/>\n";
    for (int i = 0; i <= 4; ++i) {
        const double tx = xmin + (xmax - xmin) * i / 4.0;
        const double vy = ymin + (ymax - ymin) * i / 4.0;
        out << "<text x=\"" << sx(tx) << "\" y=\"" << H - mb + 18
            << "\" text-anchor=\"middle\" font-size=\"11\">" << fmt(tx) << "</text>\n"
            << "<text x=\"" << ml - 6 << "\" y=\"" << sy(vy) + 4
            << "\" text-anchor=\"end\" font-size=\"11\">" << fmt(vy) << "</text>\n";
    }

    if (!ts.empty()) {
        out << "<polygon fill=\"#aecbe8\" fill-opacity=\"0.5\" stroke=\"none\" points=\"";
        for (size_t i = 0; i < ts.size(); ++i) out << sx(ts[i]) << ',' << sy(hi[i]) << ' ';
        for (size_t i = ts.size(); i-- > 0;) out << sx(ts[i]) << ',' << sy(lo[i]) << ' ';
        out << "\"/>\n<polyline fill=\"none\" stroke=\"#31679b\" stroke-width=\"1.5\" points=\"";
        for (size_t i = 0; i < ts.size(); ++i) out << sx(ts[i]) << ',' << sy(mean[i]) << ' ';
        out << "\"/>\n";
    }
    out << "</svg>\n";
    if (!out) throw std::runtime_error("error while writing SVG file: " + out_svg);
}

} // namespace mtbai
