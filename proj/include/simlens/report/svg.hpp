#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <string>
#include <string_view>
#include <vector>

#include "simlens/dimred/projection.hpp"
#include "simlens/embedder/types.hpp"
#include "simlens/matrix.hpp"

namespace simlens::svg {

struct Rgb {
  int r = 0, g = 0, b = 0;
  friend bool operator==(const Rgb&, const Rgb&) = default;
};

// Fixed three-stop ramp: low #3B4CC0 (blue), middle #F7F7F7, high #B40426
// (red), linear in RGB between stops.
inline constexpr Rgb kRampLow{59, 76, 192};
inline constexpr Rgb kRampMid{247, 247, 247};
inline constexpr Rgb kRampHigh{180, 4, 38};

inline Rgb ramp(double t) {
  t = std::clamp(t, 0.0, 1.0);
  const Rgb& a = t < 0.5 ? kRampLow : kRampMid;
  const Rgb& b = t < 0.5 ? kRampMid : kRampHigh;
  const double u = t < 0.5 ? t * 2.0 : (t - 0.5) * 2.0;
  auto mix = [u](int x, int y) { return static_cast<int>(std::lround(x + (y - x) * u)); };
  return {mix(a.r, b.r), mix(a.g, b.g), mix(a.b, b.b)};
}

// Ramp position of `v` in [lo, hi]. A degenerate range maps a lone cell to
// the top of the ramp and anything larger to the middle.
inline double ramp_position(double v, double lo, double hi, std::size_t cells) {
  if (!(hi > lo)) return cells == 1 ? 1.0 : 0.5;
  return (v - lo) / (hi - lo);
}

inline std::string hex(const Rgb& c) {
  char buf[8];
  std::snprintf(buf, sizeof buf, "#%02X%02X%02X", c.r, c.g, c.b);
  return buf;
}

// Fixed-point formatting that never prints "-0".
inline std::string num(double v, int precision = 2) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", precision, v);
  std::string s(buf);
  if (s.front() == '-' && s.find_first_not_of("-0.") == std::string::npos) s.erase(0, 1);
  return s;
}

inline std::string escape(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      case '\'': out += "&apos;"; break;
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      default:
        if (static_cast<unsigned char>(c) < 0x20) out += '?';
        else out += c;
    }
  }
  return out;
}

inline std::string shorten(std::string_view s, std::size_t max_len = 20) {
  if (s.size() <= max_len) return std::string(s);
  return std::string(s.substr(0, max_len - 2)) + "..";
}

inline std::string header(double width, double height) {
  return "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
         "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(width, 0) + "\" height=\"" +
         num(height, 0) + "\" viewBox=\"0 0 " + num(width, 0) + " " + num(height, 0) +
         "\" font-family=\"DejaVu Sans, Arial, sans-serif\">\n"
         "<rect width=\"100%\" height=\"100%\" fill=\"#FFFFFF\"/>\n";
}

inline std::string text(double x, double y, std::string_view content, std::string_view extra = {}) {
  std::string s = "<text x=\"" + num(x) + "\" y=\"" + num(y) + "\"";
  if (!extra.empty()) s += " " + std::string(extra);
  return s + ">" + escape(content) + "</text>\n";
}

// Matrix heatmap with row/column labels. Values are printed inside cells
// when the matrix is at most 12 x 12.
inline std::string render_heatmap(const Matrix& m, const std::vector<std::string>& row_labels,
                                  const std::vector<std::string>& col_labels, std::string_view title) {
  const std::size_t rows = m.rows(), cols = m.cols();
  const std::size_t biggest = std::max<std::size_t>({rows, cols, 1});
  const double cell = std::clamp(640.0 / static_cast<double>(biggest), 6.0, 56.0);
  const bool annotate = rows <= 12 && cols <= 12;
  std::size_t longest = 1;
  for (const auto& l : row_labels) longest = std::max(longest, shorten(l).size());
  for (const auto& l : col_labels) longest = std::max(longest, shorten(l).size());
  const double label_font = std::clamp(cell * 0.6, 6.0, 12.0);
  const double gutter = 12.0 + static_cast<double>(longest) * label_font * 0.62;
  const double left = gutter, top = 40.0 + gutter * 0.87;
  const double width = left + cell * static_cast<double>(cols) + 90.0;
  const double height = top + cell * static_cast<double>(rows) + 20.0;

  double lo = 0.0, hi = 0.0;
  if (!m.empty()) {
    lo = *std::min_element(m.data().begin(), m.data().end());
    hi = *std::max_element(m.data().begin(), m.data().end());
  }

  std::string s = header(width, height);
  s += text(10, 22, title, "font-size=\"16\" font-weight=\"bold\"");
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < cols; ++j) {
      const double v = m(i, j);
      const Rgb c = ramp(ramp_position(v, lo, hi, rows * cols));
      const double x = left + cell * static_cast<double>(j);
      const double y = top + cell * static_cast<double>(i);
      s += "<rect x=\"" + num(x) + "\" y=\"" + num(y) + "\" width=\"" + num(cell) + "\" height=\"" +
           num(cell) + "\" fill=\"" + hex(c) + "\"><title>" + num(v, 4) + "</title></rect>\n";
      if (annotate) {
        const double lum = 0.299 * c.r + 0.587 * c.g + 0.114 * c.b;
        s += text(x + cell / 2, y + cell / 2 + 4, num(v, 2),
                  std::string("font-size=\"") + num(std::min(12.0, cell * 0.3), 1) +
                      "\" text-anchor=\"middle\" fill=\"" + (lum < 128 ? "#FFFFFF" : "#000000") + "\"");
      }
    }
  }
  for (std::size_t i = 0; i < rows && i < row_labels.size(); ++i) {
    s += text(left - 6, top + cell * (static_cast<double>(i) + 0.5) + label_font * 0.35, shorten(row_labels[i]),
              "font-size=\"" + num(label_font, 1) + "\" text-anchor=\"end\"");
  }
  for (std::size_t j = 0; j < cols && j < col_labels.size(); ++j) {
    const double x = left + cell * (static_cast<double>(j) + 0.5);
    s += text(x, top - 6, shorten(col_labels[j]),
              "font-size=\"" + num(label_font, 1) + "\" transform=\"rotate(-60 " + num(x) + " " +
                  num(top - 6) + ")\"");
  }
  // colour bar
  const double bx = left + cell * static_cast<double>(cols) + 24.0;
  const double bh = std::max(cell * static_cast<double>(rows), 60.0);
  for (int k = 0; k < 20; ++k) {
    const double t = 1.0 - (k + 0.5) / 20.0;
    s += "<rect x=\"" + num(bx) + "\" y=\"" + num(top + bh * k / 20.0) + "\" width=\"14\" height=\"" +
         num(bh / 20.0 + 0.5) + "\" fill=\"" + hex(ramp(t)) + "\"/>\n";
  }
  s += text(bx + 18, top + 10, num(hi, 3), "font-size=\"10\"");
  s += text(bx + 18, top + bh, num(lo, 3), "font-size=\"10\"");
  s += "</svg>\n";
  return s;
}

// Ten-colour categorical palette for fragments in scatter plots.
inline constexpr std::array<std::string_view, 10> kPalette = {
    "#1F77B4", "#FF7F0E", "#2CA02C", "#D62728", "#9467BD",
    "#8C564B", "#E377C2", "#7F7F7F", "#BCBD22", "#17BECF"};

// Scatter of a 2-D layout, one colour per fragment (in order of first
// appearance), axes auto-scaled with a 5% margin.
inline std::string render_scatter(const Projection2D& p, std::string_view title) {
  constexpr double width = 680, height = 520;
  constexpr double left = 70, right = 180, top = 44, bottom = 56;
  const double pw = width - left - right, ph = height - top - bottom;

  std::vector<std::string> groups;
  std::vector<std::size_t> group_of(p.points.rows());
  for (std::size_t i = 0; i < p.points.rows(); ++i) {
    const std::string& id = i < p.labels.size() ? p.labels[i].fragment_id : std::string();
    auto it = std::find(groups.begin(), groups.end(), id);
    if (it == groups.end()) {
      groups.push_back(id);
      it = groups.end() - 1;
    }
    group_of[i] = static_cast<std::size_t>(it - groups.begin());
  }

  auto axis_range = [&](std::size_t c) {
    double lo = 0.0, hi = 0.0;
    for (std::size_t i = 0; i < p.points.rows(); ++i) {
      const double v = p.points(i, c);
      if (i == 0 || v < lo) lo = v;
      if (i == 0 || v > hi) hi = v;
    }
    double span = hi - lo;
    if (!(span > 0.0)) {
      span = std::max(std::abs(lo), 1.0);
      lo -= span / 2;
      hi += span / 2;
      span = hi - lo;
    }
    return std::array<double, 2>{lo - 0.05 * span, hi + 0.05 * span};
  };
  const auto xr = axis_range(0);
  const auto yr = axis_range(1);
  auto sx = [&](double v) { return left + (v - xr[0]) / (xr[1] - xr[0]) * pw; };
  auto sy = [&](double v) { return top + ph - (v - yr[0]) / (yr[1] - yr[0]) * ph; };

  std::string s = header(width, height);
  s += text(10, 24, title, "font-size=\"16\" font-weight=\"bold\"");
  s += "<rect x=\"" + num(left) + "\" y=\"" + num(top) + "\" width=\"" + num(pw) + "\" height=\"" + num(ph) +
       "\" fill=\"none\" stroke=\"#444444\"/>\n";
  for (int k = 0; k <= 4; ++k) {
    const double fx = xr[0] + (xr[1] - xr[0]) * k / 4.0;
    const double fy = yr[0] + (yr[1] - yr[0]) * k / 4.0;
    s += text(sx(fx), top + ph + 16, num(fx, 2), "font-size=\"10\" text-anchor=\"middle\"");
    s += text(left - 6, sy(fy) + 3, num(fy, 2), "font-size=\"10\" text-anchor=\"end\"");
  }
  s += text(left + pw / 2, height - 14, std::string(to_string(p.method)) + " 1",
            "font-size=\"12\" text-anchor=\"middle\"");
  s += text(18, top + ph / 2, std::string(to_string(p.method)) + " 2",
            "font-size=\"12\" text-anchor=\"middle\" transform=\"rotate(-90 18 " + num(top + ph / 2) + ")\"");

  for (std::size_t i = 0; i < p.points.rows(); ++i) {
    const auto colour = kPalette[group_of[i] % kPalette.size()];
    const std::string surface = i < p.labels.size() ? p.labels[i].surface : std::string();
    s += "<circle cx=\"" + num(sx(p.points(i, 0))) + "\" cy=\"" + num(sy(p.points(i, 1))) +
         "\" r=\"4\" fill=\"" + std::string(colour) + "\" fill-opacity=\"0.75\"><title>" + escape(surface) +
         "</title></circle>\n";
  }
  for (std::size_t g = 0; g < groups.size(); ++g) {
    const double ly = top + 14 + 20.0 * static_cast<double>(g);
    s += "<circle cx=\"" + num(width - right + 20) + "\" cy=\"" + num(ly - 4) + "\" r=\"5\" fill=\"" +
         std::string(kPalette[g % kPalette.size()]) + "\"/>\n";
    s += text(width - right + 30, ly, shorten(groups[g], 22), "font-size=\"12\"");
  }
  s += "</svg>\n";
  return s;
}

// One panel of a saliency figure: the fragment's source with every code
// token shaded by its score.
struct SaliencyPanel {
  std::string fragment_id;
  std::string source;
  std::vector<Token> tokens;   // code tokens only, aligned with scores
  std::vector<double> scores;
};

// Shading runs from the middle (white) to the top (red) of the ramp,
// scaled by the largest score over both panels.
inline std::string render_saliency(const std::vector<SaliencyPanel>& panels, std::string_view title) {
  constexpr double font = 13.0, char_w = 7.8, line_h = 18.0, pad = 16.0;
  double peak = 0.0;
  for (const auto& p : panels)
    for (double v : p.scores) peak = std::max(peak, v);

  struct Layout {
    std::vector<std::string> lines;
    std::vector<std::size_t> line_start;
    std::size_t widest = 0;
  };
  std::vector<Layout> layouts;
  for (const auto& p : panels) {
    Layout l;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= p.source.size(); ++i) {
      if (i == p.source.size() || p.source[i] == '\n') {
        if (i > start || i < p.source.size()) {
          l.lines.push_back(p.source.substr(start, i - start));
          l.line_start.push_back(start);
        }
        start = i + 1;
      }
    }
    for (const auto& line : l.lines) l.widest = std::max(l.widest, line.size());
    layouts.push_back(std::move(l));
  }

  std::vector<double> panel_x;
  double x = pad;
  for (const auto& l : layouts) {
    panel_x.push_back(x);
    x += std::max<double>(static_cast<double>(l.widest) * char_w, 160.0) + 2 * pad;
  }
  std::size_t max_lines = 1;
  for (const auto& l : layouts) max_lines = std::max(max_lines, l.lines.size());
  const double top = 70.0;
  const double width = x + pad;
  const double height = top + line_h * static_cast<double>(max_lines) + 50.0;

  std::string s = header(width, height);
  s += text(pad, 24, title, "font-size=\"16\" font-weight=\"bold\"");
  for (std::size_t pi = 0; pi < panels.size(); ++pi) {
    const auto& p = panels[pi];
    const auto& l = layouts[pi];
    const double px = panel_x[pi];
    s += text(px, top - 20, p.fragment_id, "font-size=\"13\" font-weight=\"bold\"");
    for (std::size_t t = 0; t < p.tokens.size() && t < p.scores.size(); ++t) {
      const CharSpan span = p.tokens[t].span;
      if (span.end <= span.begin || span.end > p.source.size()) continue;
      const auto it = std::upper_bound(l.line_start.begin(), l.line_start.end(), span.begin);
      if (it == l.line_start.begin()) continue;
      const std::size_t line = static_cast<std::size_t>(it - l.line_start.begin()) - 1;
      if (p.source.substr(span.begin, span.end - span.begin).find('\n') != std::string::npos) continue;
      const double col = static_cast<double>(span.begin - l.line_start[line]);
      const double len = static_cast<double>(span.end - span.begin);
      const double level = peak > 0.0 ? p.scores[t] / peak : 0.0;
      s += "<rect x=\"" + num(px + col * char_w) + "\" y=\"" + num(top + line_h * static_cast<double>(line) - font) +
           "\" width=\"" + num(len * char_w) + "\" height=\"" + num(line_h - 2) + "\" fill=\"" +
           hex(ramp(0.5 + 0.5 * level)) + "\"><title>" + escape(p.tokens[t].surface) + " " + num(p.scores[t], 6) +
           "</title></rect>\n";
    }
    for (std::size_t li = 0; li < l.lines.size(); ++li) {
      // textLength pins the advance to char_w so the token boxes line up
      // whichever monospace font the viewer substitutes.
      std::string attrs = "font-size=\"" + num(font, 0) +
                          "\" font-family=\"DejaVu Sans Mono, monospace\" xml:space=\"preserve\"";
      if (!l.lines[li].empty()) {
        attrs += " textLength=\"" + num(static_cast<double>(l.lines[li].size()) * char_w) +
                 "\" lengthAdjust=\"spacing\"";
      }
      s += text(px, top + line_h * static_cast<double>(li), l.lines[li], attrs);
    }
  }
  const double ly = height - 24;
  for (int k = 0; k < 10; ++k) {
    s += "<rect x=\"" + num(pad + 16.0 * k) + "\" y=\"" + num(ly - 10) + "\" width=\"16\" height=\"12\" fill=\"" +
         hex(ramp(0.5 + 0.5 * (k + 0.5) / 10.0)) + "\"/>\n";
  }
  s += text(pad + 170, ly, "saliency 0 .. " + num(peak, 4), "font-size=\"11\"");
  s += "</svg>\n";
  return s;
}

}  // namespace simlens::svg
