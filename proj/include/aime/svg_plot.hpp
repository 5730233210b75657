#pragma once

#include <algorithm>
#include <array>
#include <cstdio>
#include <string>
#include <string_view>
#include <vector>

#include "aime/errors.hpp"
#include "aime/matrix.hpp"

namespace aime {

/// Okabe-Ito palette; classes beyond eight reuse it cyclically.
inline constexpr std::array<std::string_view, 8> kPalette = {
    "#E69F00", "#56B4E9", "#009E73", "#F0E442", "#0072B2", "#D55E00", "#CC79A7", "#000000",
};

struct PlotOptions {
  double panel_size = 160.0;
  double gap = 12.0;
  double margin = 40.0;
  double point_radius = 2.0;
  std::string title = "embedding";
};

namespace detail {

inline std::string fixed2(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

inline std::string xml_escape(std::string_view s) {
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

}  // namespace detail

/// d x d scatter matrix as SVG 1.1. Panel (r, c) with r != c plots column c
/// (horizontal) against column r (vertical); diagonal panels plot column r
/// against the class index as a strip. Every panel draws all n points, each
/// a <circle> filled with its class colour. Classes are ordered by sorted
/// label text.
inline std::string scatter_matrix_svg(const Matrix& embedding, const std::vector<std::string>& labels,
                                      const PlotOptions& opt = {}) {
  const std::size_t n = embedding.rows();
  const std::size_t d = embedding.cols();
  if (labels.size() != n) {
    throw ShapeError("scatter_matrix_svg: " + std::to_string(labels.size()) + " labels for " +
                     std::to_string(n) + " points");
  }
  if (d == 0) throw DomainError("scatter_matrix_svg: embedding has no columns");

  std::vector<std::string> classes(labels);
  std::sort(classes.begin(), classes.end());
  classes.erase(std::unique(classes.begin(), classes.end()), classes.end());
  std::vector<std::size_t> class_of(n);
  for (std::size_t i = 0; i < n; ++i)
    class_of[i] = static_cast<std::size_t>(std::lower_bound(classes.begin(), classes.end(), labels[i]) -
                                           classes.begin());

  std::vector<double> lo(d, 0.0), hi(d, 0.0);
  for (std::size_t c = 0; c < d; ++c) {
    if (n == 0) break;
    lo[c] = hi[c] = embedding(0, c);
    for (std::size_t i = 1; i < n; ++i) {
      lo[c] = std::min(lo[c], embedding(i, c));
      hi[c] = std::max(hi[c], embedding(i, c));
    }
  }
  const double inner = opt.panel_size - 8.0;
  auto scale = [&](double v, std::size_t c) {
    if (hi[c] - lo[c] <= 0.0) return 0.5 * inner;
    return (v - lo[c]) / (hi[c] - lo[c]) * inner;
  };

  const double grid = static_cast<double>(d) * opt.panel_size + static_cast<double>(d - 1) * opt.gap;
  const double legend_w = 120.0;
  const double width = 2.0 * opt.margin + grid + legend_w;
  const double height = 2.0 * opt.margin + grid;

  std::string svg;
  svg += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" + detail::fixed2(width) +
         "\" height=\"" + detail::fixed2(height) + "\" viewBox=\"0 0 " + detail::fixed2(width) + " " +
         detail::fixed2(height) + "\">\n";
  svg += "<title>" + detail::xml_escape(opt.title) + "</title>\n";
  svg += "<rect x=\"0\" y=\"0\" width=\"" + detail::fixed2(width) + "\" height=\"" + detail::fixed2(height) +
         "\" fill=\"#FFFFFF\"/>\n";

  for (std::size_t r = 0; r < d; ++r) {
    for (std::size_t c = 0; c < d; ++c) {
      const double ox = opt.margin + static_cast<double>(c) * (opt.panel_size + opt.gap);
      const double oy = opt.margin + static_cast<double>(r) * (opt.panel_size + opt.gap);
      svg += "<g class=\"panel\" data-row=\"" + std::to_string(r) + "\" data-col=\"" + std::to_string(c) + "\">\n";
      svg += "<rect x=\"" + detail::fixed2(ox) + "\" y=\"" + detail::fixed2(oy) + "\" width=\"" +
             detail::fixed2(opt.panel_size) + "\" height=\"" + detail::fixed2(opt.panel_size) +
             "\" fill=\"none\" stroke=\"#888888\"/>\n";
      if (r == c) {
        svg += "<text x=\"" + detail::fixed2(ox + 4.0) + "\" y=\"" + detail::fixed2(oy + 14.0) +
               "\" font-size=\"11\" font-family=\"sans-serif\">dim " + std::to_string(r + 1) + "</text>\n";
      }
      for (std::size_t i = 0; i < n; ++i) {
        const double px = ox + 4.0 + scale(embedding(i, c), c);
        double py = 0.0;
        if (r == c) {
          const double band = inner / static_cast<double>(classes.size());
          py = oy + 4.0 + band * (static_cast<double>(class_of[i]) + 0.5);
        } else {
          py = oy + 4.0 + inner - scale(embedding(i, r), r);
        }
        svg += "<circle cx=\"" + detail::fixed2(px) + "\" cy=\"" + detail::fixed2(py) + "\" r=\"" +
               detail::fixed2(opt.point_radius) + "\" fill=\"" +
               std::string(kPalette[class_of[i] % kPalette.size()]) + "\" fill-opacity=\"0.7\"/>\n";
      }
      svg += "</g>\n";
    }
  }

  const double lx = opt.margin + grid + 16.0;
  svg += "<g class=\"legend\">\n";
  for (std::size_t k = 0; k < classes.size(); ++k) {
    const double ly = opt.margin + 16.0 * static_cast<double>(k);
    svg += "<rect x=\"" + detail::fixed2(lx) + "\" y=\"" + detail::fixed2(ly) + "\" width=\"10\" height=\"10\" fill=\"" +
           std::string(kPalette[k % kPalette.size()]) + "\"/>\n";
    svg += "<text x=\"" + detail::fixed2(lx + 14.0) + "\" y=\"" + detail::fixed2(ly + 9.0) +
           "\" font-size=\"11\" font-family=\"sans-serif\">" + detail::xml_escape(classes[k]) + "</text>\n";
  }
  svg += "</g>\n</svg>\n";
  return svg;
}

}  // namespace aime
