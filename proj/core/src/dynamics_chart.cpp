#include <algorithm>
#include <array>
#include <cmath>

#include <fmt/format.h>

#include "tarsim/runner.hpp"

namespace tarsim {
namespace {

std::string xml_escape(std::string_view s) {
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

// 1, 2 or 5 times a power of ten, giving about `target` ticks.
double nice_step(double range, int target) {
  const double raw = range / target;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  for (double m : {1.0, 2.0, 5.0, 10.0}) {
    if (raw <= m * mag) return m * mag;
  }
  return 10.0 * mag;
}

}  // namespace

std::string render_dynamics_svg(const CostDynamics& dynamics, const std::string& title) {
  constexpr double kWidth = 760, kHeight = 440;
  constexpr double kLeft = 70, kRight = 180, kTop = 40, kBottom = 50;
  const double plot_w = kWidth - kLeft - kRight;
  const double plot_h = kHeight - kTop - kBottom;

  double max_total = 1.0;
  for (const auto& e : dynamics) max_total = std::max(max_total, e.total);
  const double y_step = nice_step(max_total, 5);
  const double y_max = std::ceil(max_total / y_step) * y_step;
  const std::size_t n = dynamics.size();
  const int first_iter = n ? dynamics.front().iteration : 0;
  const int last_iter = n ? dynamics.back().iteration : 1;
  const double x_span = std::max(1, last_iter - first_iter);

  auto px = [&](double iteration) { return kLeft + (iteration - first_iter) / x_span * plot_w; };
  auto py = [&](double value) { return kTop + plot_h - value / y_max * plot_h; };

  std::string svg = fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{0}\" height=\"{1}\" "
      "viewBox=\"0 0 {0} {1}\" font-family=\"sans-serif\" font-size=\"12\">\n"
      "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      "<text x=\"{2}\" y=\"22\" font-size=\"14\">{3}</text>\n",
      kWidth, kHeight, kLeft, xml_escape(title));

  struct Layer {
    const char* name;
    const char* color;
    double CostEntry::*field;
  };
  const std::array<Layer, 4> layers{{
      {"phase 1 relevant", "#1f77b4", &CostEntry::phase1_pos},
      {"phase 1 non-relevant", "#aec7e8", &CostEntry::phase1_neg},
      {"phase 2 relevant", "#ff7f0e", &CostEntry::phase2_pos},
      {"phase 2 non-relevant", "#ffbb78", &CostEntry::phase2_neg},
  }};

  std::vector<double> base(n, 0.0);
  for (std::size_t l = 0; l < layers.size(); ++l) {
    std::string points;
    std::vector<double> top(n);
    for (std::size_t i = 0; i < n; ++i) {
      top[i] = base[i] + dynamics[i].*layers[l].field;
      points += fmt::format("{:.2f},{:.2f} ", px(dynamics[i].iteration), py(top[i]));
    }
    for (std::size_t i = n; i-- > 0;) {
      points += fmt::format("{:.2f},{:.2f} ", px(dynamics[i].iteration), py(base[i]));
    }
    if (n > 0) {
      svg += fmt::format("<polygon points=\"{}\" fill=\"{}\" stroke=\"none\"/>\n", points,
                         layers[l].color);
    }
    base = std::move(top);
    const double ly = kTop + 10 + 20.0 * static_cast<double>(l);
    svg += fmt::format(
        "<rect x=\"{0}\" y=\"{1}\" width=\"12\" height=\"12\" fill=\"{2}\"/>"
        "<text x=\"{3}\" y=\"{4}\">{5}</text>\n",
        kWidth - kRight + 16, ly, layers[l].color, kWidth - kRight + 34, ly + 10, layers[l].name);
  }

  // axes and ticks
  svg += fmt::format(
      "<line x1=\"{0}\" y1=\"{1}\" x2=\"{0}\" y2=\"{2}\" stroke=\"black\"/>\n"
      "<line x1=\"{0}\" y1=\"{2}\" x2=\"{3}\" y2=\"{2}\" stroke=\"black\"/>\n",
      kLeft, kTop, kTop + plot_h, kLeft + plot_w);
  for (double v = 0; v <= y_max + 1e-9; v += y_step) {
    svg += fmt::format(
        "<line x1=\"{0}\" y1=\"{1:.2f}\" x2=\"{2}\" y2=\"{1:.2f}\" stroke=\"black\"/>"
        "<text x=\"{3}\" y=\"{4:.2f}\" text-anchor=\"end\">{5}</text>\n",
        kLeft - 4, py(v), kLeft, kLeft - 6, py(v) + 4, v);
  }
  const double x_step = std::max(1.0, nice_step(x_span, 8));
  for (double it = first_iter; it <= last_iter + 1e-9; it += x_step) {
    svg += fmt::format(
        "<line x1=\"{0:.2f}\" y1=\"{1}\" x2=\"{0:.2f}\" y2=\"{2}\" stroke=\"black\"/>"
        "<text x=\"{0:.2f}\" y=\"{3}\" text-anchor=\"middle\">{4}</text>\n",
        px(it), kTop + plot_h, kTop + plot_h + 4, kTop + plot_h + 18, it);
  }
  svg += fmt::format(
      "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">iteration</text>\n"
      "<text x=\"16\" y=\"{}\" transform=\"rotate(-90 16 {})\" text-anchor=\"middle\">total review "
      "cost</text>\n",
      kLeft + plot_w / 2, kHeight - 12, kTop + plot_h / 2, kTop + plot_h / 2);

  auto zero = std::find_if(dynamics.begin(), dynamics.end(),
                           [](const CostEntry& e) { return e.depth_zero; });
  if (zero != dynamics.end()) {
    svg += fmt::format(
        "<line class=\"depth-zero\" x1=\"{0:.2f}\" y1=\"{1}\" x2=\"{0:.2f}\" y2=\"{2}\" "
        "stroke=\"gray\" stroke-width=\"1.5\" stroke-dasharray=\"6,4\"/>\n",
        px(zero->iteration), kTop, kTop + plot_h);
  }
  svg += "</svg>\n";
  return svg;
}

}  // namespace tarsim
