#include "pixelgame/plot.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <cstdio>

#include "pixelgame/error.hpp"
#include "pixelgame/png_io.hpp"

namespace pixelgame {

namespace {

struct Rgb {
  std::uint8_t r, g, b;
};

constexpr Rgb kWhite{255, 255, 255};
constexpr Rgb kBlack{0, 0, 0};
constexpr Rgb kGrid{225, 225, 225};
constexpr std::array<Rgb, 6> kPalette{{
    {31, 119, 180}, {255, 127, 14}, {44, 160, 44}, {214, 39, 40}, {148, 103, 189}, {140, 86, 75}}};

struct Glyph {
  char ch;
  std::array<std::uint8_t, 7> rows;
};

// 5x7 bitmap font; bit 4 is the leftmost column.
constexpr Glyph kFont[] = {
    {'0', {0b01110, 0b10001, 0b10011, 0b10101, 0b11001, 0b10001, 0b01110}},
    {'1', {0b00100, 0b01100, 0b00100, 0b00100, 0b00100, 0b00100, 0b01110}},
    {'2', {0b01110, 0b10001, 0b00001, 0b00010, 0b00100, 0b01000, 0b11111}},
    {'3', {0b11111, 0b00010, 0b00100, 0b00010, 0b00001, 0b10001, 0b01110}},
    {'4', {0b00010, 0b00110, 0b01010, 0b10010, 0b11111, 0b00010, 0b00010}},
    {'5', {0b11111, 0b10000, 0b11110, 0b00001, 0b00001, 0b10001, 0b01110}},
    {'6', {0b00110, 0b01000, 0b10000, 0b11110, 0b10001, 0b10001, 0b01110}},
    {'7', {0b11111, 0b00001, 0b00010, 0b00100, 0b01000, 0b01000, 0b01000}},
    {'8', {0b01110, 0b10001, 0b10001, 0b01110, 0b10001, 0b10001, 0b01110}},
    {'9', {0b01110, 0b10001, 0b10001, 0b01111, 0b00001, 0b00010, 0b01100}},
    {'A', {0b01110, 0b10001, 0b10001, 0b11111, 0b10001, 0b10001, 0b10001}},
    {'B', {0b11110, 0b10001, 0b10001, 0b11110, 0b10001, 0b10001, 0b11110}},
    {'C', {0b01110, 0b10001, 0b10000, 0b10000, 0b10000, 0b10001, 0b01110}},
    {'D', {0b11100, 0b10010, 0b10001, 0b10001, 0b10001, 0b10010, 0b11100}},
    {'E', {0b11111, 0b10000, 0b10000, 0b11110, 0b10000, 0b10000, 0b11111}},
    {'F', {0b11111, 0b10000, 0b10000, 0b11110, 0b10000, 0b10000, 0b10000}},
    {'G', {0b01110, 0b10001, 0b10000, 0b10111, 0b10001, 0b10001, 0b01111}},
    {'H', {0b10001, 0b10001, 0b10001, 0b11111, 0b10001, 0b10001, 0b10001}},
    {'I', {0b01110, 0b00100, 0b00100, 0b00100, 0b00100, 0b00100, 0b01110}},
    {'J', {0b00111, 0b00010, 0b00010, 0b00010, 0b00010, 0b10010, 0b01100}},
    {'K', {0b10001, 0b10010, 0b10100, 0b11000, 0b10100, 0b10010, 0b10001}},
    {'L', {0b10000, 0b10000, 0b10000, 0b10000, 0b10000, 0b10000, 0b11111}},
    {'M', {0b10001, 0b11011, 0b10101, 0b10101, 0b10001, 0b10001, 0b10001}},
    {'N', {0b10001, 0b10001, 0b11001, 0b10101, 0b10011, 0b10001, 0b10001}},
    {'O', {0b01110, 0b10001, 0b10001, 0b10001, 0b10001, 0b10001, 0b01110}},
    {'P', {0b11110, 0b10001, 0b10001, 0b11110, 0b10000, 0b10000, 0b10000}},
    {'Q', {0b01110, 0b10001, 0b10001, 0b10001, 0b10101, 0b10010, 0b01101}},
    {'R', {0b11110, 0b10001, 0b10001, 0b11110, 0b10100, 0b10010, 0b10001}},
    {'S', {0b01111, 0b10000, 0b10000, 0b01110, 0b00001, 0b00001, 0b11110}},
    {'T', {0b11111, 0b00100, 0b00100, 0b00100, 0b00100, 0b00100, 0b00100}},
    {'U', {0b10001, 0b10001, 0b10001, 0b10001, 0b10001, 0b10001, 0b01110}},
    {'V', {0b10001, 0b10001, 0b10001, 0b10001, 0b10001, 0b01010, 0b00100}},
    {'W', {0b10001, 0b10001, 0b10001, 0b10101, 0b10101, 0b10101, 0b01010}},
    {'X', {0b10001, 0b10001, 0b01010, 0b00100, 0b01010, 0b10001, 0b10001}},
    {'Y', {0b10001, 0b10001, 0b10001, 0b01010, 0b00100, 0b00100, 0b00100}},
    {'Z', {0b11111, 0b00001, 0b00010, 0b00100, 0b01000, 0b10000, 0b11111}},
    {'.', {0b00000, 0b00000, 0b00000, 0b00000, 0b00000, 0b01100, 0b01100}},
    {',', {0b00000, 0b00000, 0b00000, 0b00000, 0b01100, 0b00100, 0b01000}},
    {'+', {0b00000, 0b00100, 0b00100, 0b11111, 0b00100, 0b00100, 0b00000}},
    {'-', {0b00000, 0b00000, 0b00000, 0b11111, 0b00000, 0b00000, 0b00000}},
    {'_', {0b00000, 0b00000, 0b00000, 0b00000, 0b00000, 0b00000, 0b11111}},
    {':', {0b00000, 0b01100, 0b01100, 0b00000, 0b01100, 0b01100, 0b00000}},
    {'/', {0b00000, 0b00001, 0b00010, 0b00100, 0b01000, 0b10000, 0b00000}},
    {'(', {0b00010, 0b00100, 0b01000, 0b01000, 0b01000, 0b00100, 0b00010}},
    {')', {0b01000, 0b00100, 0b00010, 0b00010, 0b00010, 0b00100, 0b01000}},
    {'%', {0b11000, 0b11001, 0b00010, 0b00100, 0b01000, 0b10011, 0b00011}},
    {'<', {0b00010, 0b00100, 0b01000, 0b10000, 0b01000, 0b00100, 0b00010}},
    {'>', {0b01000, 0b00100, 0b00010, 0b00001, 0b00010, 0b00100, 0b01000}},
    {'=', {0b00000, 0b00000, 0b11111, 0b00000, 0b11111, 0b00000, 0b00000}},
};

constexpr int kGlyphAdvance = 6;

class Canvas {
 public:
  Canvas(int w, int h) : w_(w), h_(h), px_(static_cast<std::size_t>(w) * h * 3, 255) {}

  void set(int x, int y, Rgb c) {
    if (x < 0 || y < 0 || x >= w_ || y >= h_) return;
    const std::size_t i = (static_cast<std::size_t>(y) * w_ + x) * 3;
    px_[i] = c.r;
    px_[i + 1] = c.g;
    px_[i + 2] = c.b;
  }

  void rect(int x0, int y0, int x1, int y1, Rgb c) {
    for (int y = std::min(y0, y1); y <= std::max(y0, y1); ++y)
      for (int x = std::min(x0, x1); x <= std::max(x0, x1); ++x) set(x, y, c);
  }

  void line(int x0, int y0, int x1, int y1, Rgb c) {
    const int dx = std::abs(x1 - x0), dy = -std::abs(y1 - y0);
    const int sx = x0 < x1 ? 1 : -1, sy = y0 < y1 ? 1 : -1;
    int err = dx + dy;
    while (true) {
      set(x0, y0, c);
      if (x0 == x1 && y0 == y1) break;
      const int e2 = 2 * err;
      if (e2 >= dy) { err += dy; x0 += sx; }
      if (e2 <= dx) { err += dx; y0 += sy; }
    }
  }

  void text(int x, int y, const std::string& s, Rgb c) {
    for (char raw : s) {
      const char ch = static_cast<char>(std::toupper(static_cast<unsigned char>(raw)));
      for (const auto& g : kFont) {
        if (g.ch != ch) continue;
        for (int r = 0; r < 7; ++r)
          for (int b = 0; b < 5; ++b)
            if (g.rows[r] & (1 << (4 - b))) set(x + b, y + r, c);
      }
      x += kGlyphAdvance;
    }
  }

  static int text_width(const std::string& s) { return static_cast<int>(s.size()) * kGlyphAdvance; }

  void save(const std::filesystem::path& path) const {
    write_png(path, RawImage{h_, w_, 3, px_});
  }

 private:
  int w_, h_;
  std::vector<std::uint8_t> px_;
};

std::string label(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

struct Frame {
  int left = 64, right = 16, top = 28, bottom = 48;
};

double nice_top(double v) {
  if (!(v > 0.0)) return 1.0;
  const double mag = std::pow(10.0, std::floor(std::log10(v)));
  for (double step : {1.0, 2.0, 2.5, 5.0, 10.0}) {
    if (step * mag >= v) return step * mag;
  }
  return 10.0 * mag;
}

void draw_axes(Canvas& cv, const ChartSpec& chart, const Frame& f, double y_lo, double y_hi) {
  const int x0 = f.left, x1 = chart.width - f.right;
  const int y0 = chart.height - f.bottom, y1 = f.top;
  for (int t = 0; t <= 5; ++t) {
    const double v = y_lo + (y_hi - y_lo) * t / 5.0;
    const int y = y0 - static_cast<int>(std::lround((y0 - y1) * t / 5.0));
    if (t > 0) cv.line(x0 + 1, y, x1, y, kGrid);
    const std::string s = label(v);
    cv.text(x0 - 6 - Canvas::text_width(s), y - 3, s, kBlack);
  }
  cv.line(x0, y0, x1, y0, kBlack);
  cv.line(x0, y0, x0, y1, kBlack);
  cv.text((chart.width - Canvas::text_width(chart.title)) / 2, 8, chart.title, kBlack);
}

}  // namespace

void write_bar_chart(const std::filesystem::path& path, const ChartSpec& chart,
                     const std::vector<BarSeries>& series) {
  for (const auto& s : series) {
    if (s.values.size() != chart.categories.size()) {
      fail(ErrorKind::Dimension, "bar series '" + s.name + "' does not match the category count");
    }
  }
  Canvas cv(chart.width, chart.height);
  Frame f;
  double peak = 0.0;
  for (const auto& s : series)
    for (double v : s.values)
      if (std::isfinite(v)) peak = std::max(peak, v);
  const double top = nice_top(peak);
  draw_axes(cv, chart, f, 0.0, top);

  const int x0 = f.left, x1 = chart.width - f.right, y0 = chart.height - f.bottom, y1 = f.top;
  const std::size_t groups = std::max<std::size_t>(1, chart.categories.size());
  const double group_w = static_cast<double>(x1 - x0) / static_cast<double>(groups);
  const std::size_t nseries = std::max<std::size_t>(1, series.size());
  const double bar_w = group_w * 0.8 / static_cast<double>(nseries);
  // Category labels are thinned so they never overlap.
  int label_every = 1;
  while (label_every * group_w < 8.0 * kGlyphAdvance && label_every < static_cast<int>(groups)) {
    label_every *= 2;
  }
  for (std::size_t g = 0; g < chart.categories.size(); ++g) {
    const double gx = x0 + g * group_w + group_w * 0.1;
    for (std::size_t s = 0; s < series.size(); ++s) {
      const double v = series[s].values[g];
      if (!std::isfinite(v) || v <= 0.0) continue;
      const int bx0 = static_cast<int>(gx + s * bar_w);
      const int bx1 = std::max(bx0, static_cast<int>(gx + (s + 1) * bar_w) - 1);
      const int by = y0 - static_cast<int>(std::lround((y0 - y1) * std::min(v, top) / top));
      cv.rect(bx0, by, bx1, y0 - 1, kPalette[s % kPalette.size()]);
    }
    if (static_cast<int>(g) % label_every == 0) {
      std::string name = chart.categories[g];
      const std::size_t max_chars =
          static_cast<std::size_t>(std::max(1.0, group_w * label_every / kGlyphAdvance - 1));
      if (name.size() > max_chars) name.resize(max_chars);
      const int cx = static_cast<int>(x0 + (g + 0.5) * group_w);
      cv.text(cx - Canvas::text_width(name) / 2, y0 + 8, name, kBlack);
    }
  }
  if (series.size() > 1) {
    int ly = f.top + 4;
    for (std::size_t s = 0; s < series.size(); ++s) {
      const int lx = x1 - 8 - Canvas::text_width(series[s].name) - 12;
      cv.rect(lx, ly, lx + 7, ly + 6, kPalette[s % kPalette.size()]);
      cv.text(lx + 12, ly, series[s].name, kBlack);
      ly += 12;
    }
  }
  cv.save(path);
}

void write_line_chart(const std::filesystem::path& path, const ChartSpec& chart,
                      const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) fail(ErrorKind::Dimension, "line chart x/y length mismatch");
  Canvas cv(chart.width, chart.height);
  Frame f;
  double peak = 0.0;
  for (double v : y)
    if (std::isfinite(v)) peak = std::max(peak, v);
  const double top = nice_top(peak);
  draw_axes(cv, chart, f, 0.0, top);
  if (x.empty()) {
    cv.save(path);
    return;
  }
  const auto [xmin_it, xmax_it] = std::minmax_element(x.begin(), x.end());
  const double xmin = *xmin_it;
  const double xspan = std::max(1e-12, *xmax_it - xmin);
  const int x0 = f.left, x1 = chart.width - f.right, y0 = chart.height - f.bottom, y1 = f.top;
  const auto px = [&](double v) { return x0 + static_cast<int>(std::lround((x1 - x0) * (v - xmin) / xspan)); };
  const auto py = [&](double v) { return y0 - static_cast<int>(std::lround((y0 - y1) * std::min(v, top) / top)); };
  for (std::size_t i = 1; i < x.size(); ++i) {
    cv.line(px(x[i - 1]), py(y[i - 1]), px(x[i]), py(y[i]), kPalette[0]);
  }
  for (double t : {xmin, xmin + xspan / 2, xmin + xspan}) {
    const std::string s = label(t);
    cv.text(px(t) - Canvas::text_width(s) / 2, y0 + 8, s, kBlack);
  }
  cv.save(path);
}

}  // namespace pixelgame
