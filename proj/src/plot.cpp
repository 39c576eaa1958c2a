#include "weightcaster/plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

#include "weightcaster/error.hpp"

namespace weightcaster {

namespace {

struct Bounds {
  double lo = 0.0;
  double hi = 1.0;

  void widen(double v) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string tick(double v) {
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
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace

std::string render_svg(const LabeledDataset& train, const LabeledDataset& test,
                       const PredictionTable& pred, const PlotOptions& options) {
  if (train.x.cols() != 1 || test.x.cols() != 1 || pred.x.cols() != 1)
    throw ConfigError("plot: only one-dimensional inputs are supported");
  if (train.y.cols() != 1 || test.y.cols() != 1 || pred.y_hat.cols() != 1)
    throw ConfigError("plot: only one-dimensional outputs are supported");
  const bool band = !pred.variance.empty();

  std::vector<std::size_t> order(pred.x.rows());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return pred.x(a, 0) < pred.x(b, 0); });

  Bounds bx{pred.x(order.front(), 0), pred.x(order.back(), 0)};
  Bounds by{pred.y_hat(0, 0), pred.y_hat(0, 0)};
  auto half = [&](std::size_t i) { return band ? 2.0 * std::sqrt(pred.variance(i, 0)) : 0.0; };
  for (std::size_t i = 0; i < pred.x.rows(); ++i) {
    by.widen(pred.y_hat(i, 0) - half(i));
    by.widen(pred.y_hat(i, 0) + half(i));
  }
  for (const LabeledDataset* d : {&train, &test}) {
    for (std::size_t i = 0; i < d->size(); ++i) {
      bx.widen(d->x(i, 0));
      by.widen(d->y(i, 0));
    }
  }
  if (bx.hi == bx.lo) bx.hi = bx.lo + 1.0;
  if (by.hi == by.lo) by.hi = by.lo + 1.0;
  const double pad_y = 0.05 * (by.hi - by.lo);
  by.lo -= pad_y;
  by.hi += pad_y;

  const double w = options.width, h = options.height;
  const double left = 60, right = 20, top = 40, bottom = 50;
  const double pw = w - left - right, ph = h - top - bottom;
  auto sx = [&](double x) { return left + (x - bx.lo) / (bx.hi - bx.lo) * pw; };
  auto sy = [&](double y) { return top + (by.hi - y) / (by.hi - by.lo) * ph; };

  std::ostringstream s;
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << options.width << "\" height=\""
    << options.height << "\" viewBox=\"0 0 " << options.width << ' ' << options.height << "\">\n";
  s << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  if (!options.title.empty()) {
    s << "<text x=\"" << num(w / 2) << "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" "
         "font-size=\"16\">"
      << escape(options.title) << "</text>\n";
  }

  // Axes and ticks.
  s << "<g stroke=\"black\" stroke-width=\"1\">\n";
  s << "<line x1=\"" << num(left) << "\" y1=\"" << num(top + ph) << "\" x2=\"" << num(left + pw)
    << "\" y2=\"" << num(top + ph) << "\"/>\n";
  s << "<line x1=\"" << num(left) << "\" y1=\"" << num(top) << "\" x2=\"" << num(left)
    << "\" y2=\"" << num(top + ph) << "\"/>\n";
  s << "</g>\n<g font-family=\"sans-serif\" font-size=\"11\">\n";
  for (int k = 0; k <= 5; ++k) {
    const double xv = bx.lo + (bx.hi - bx.lo) * k / 5.0;
    const double yv = by.lo + (by.hi - by.lo) * k / 5.0;
    s << "<text x=\"" << num(sx(xv)) << "\" y=\"" << num(top + ph + 16)
      << "\" text-anchor=\"middle\">" << tick(xv) << "</text>\n";
    s << "<text x=\"" << num(left - 6) << "\" y=\"" << num(sy(yv) + 4)
      << "\" text-anchor=\"end\">" << tick(yv) << "</text>\n";
  }
  s << "<text x=\"" << num(left + pw / 2) << "\" y=\"" << num(h - 10)
    << "\" text-anchor=\"middle\" font-size=\"13\">x</text>\n";
  s << "<text x=\"16\" y=\"" << num(top + ph / 2) << "\" text-anchor=\"middle\" font-size=\"13\" "
       "transform=\"rotate(-90 16 "
    << num(top + ph / 2) << ")\">y</text>\n</g>\n";

  if (band) {
    s << "<polygon fill=\"#4c72b0\" fill-opacity=\"0.25\" stroke=\"none\" points=\"";
    for (std::size_t i : order) s << num(sx(pred.x(i, 0))) << ',' << num(sy(pred.y_hat(i, 0) + half(i))) << ' ';
    for (auto it = order.rbegin(); it != order.rend(); ++it)
      s << num(sx(pred.x(*it, 0))) << ',' << num(sy(pred.y_hat(*it, 0) - half(*it))) << ' ';
    s << "\"/>\n";
  }

  s << "<g fill=\"#555555\" fill-opacity=\"0.6\">\n";
  for (std::size_t i = 0; i < train.size(); ++i)
    s << "<circle cx=\"" << num(sx(train.x(i, 0))) << "\" cy=\"" << num(sy(train.y(i, 0)))
      << "\" r=\"1.5\"/>\n";
  s << "</g>\n<g fill=\"none\" stroke=\"#dd8452\" stroke-width=\"0.8\">\n";
  for (std::size_t i = 0; i < test.size(); ++i) {
    const double cx = sx(test.x(i, 0)), cy = sy(test.y(i, 0));
    s << "<path d=\"M" << num(cx - 2) << ',' << num(cy - 2) << "L" << num(cx + 2) << ','
      << num(cy + 2) << "M" << num(cx - 2) << ',' << num(cy + 2) << "L" << num(cx + 2) << ','
      << num(cy - 2) << "\"/>\n";
  }
  s << "</g>\n";

  s << "<polyline fill=\"none\" stroke=\"#4c72b0\" stroke-width=\"1.5\" points=\"";
  for (std::size_t i : order) s << num(sx(pred.x(i, 0))) << ',' << num(sy(pred.y_hat(i, 0))) << ' ';
  s << "\"/>\n";

  // Legend.
  const double lx = left + 10, ly = top + 10;
  s << "<g font-family=\"sans-serif\" font-size=\"11\">\n";
  s << "<circle cx=\"" << num(lx) << "\" cy=\"" << num(ly) << "\" r=\"2.5\" fill=\"#555555\"/>"
    << "<text x=\"" << num(lx + 8) << "\" y=\"" << num(ly + 4) << "\">train</text>\n";
  s << "<path d=\"M" << num(lx - 3) << ',' << num(ly + 13) << "L" << num(lx + 3) << ','
    << num(ly + 19) << "M" << num(lx - 3) << ',' << num(ly + 19) << "L" << num(lx + 3) << ','
    << num(ly + 13) << "\" stroke=\"#dd8452\"/><text x=\"" << num(lx + 8) << "\" y=\""
    << num(ly + 20) << "\">test</text>\n";
  s << "<line x1=\"" << num(lx - 4) << "\" y1=\"" << num(ly + 32) << "\" x2=\"" << num(lx + 4)
    << "\" y2=\"" << num(ly + 32) << "\" stroke=\"#4c72b0\" stroke-width=\"1.5\"/><text x=\""
    << num(lx + 8) << "\" y=\"" << num(ly + 36) << "\">prediction"
    << (band ? " (mean &#177; 2 sd)" : "") << "</text>\n</g>\n";
  s << "</svg>\n";
  return s.str();
}

}  // namespace weightcaster
