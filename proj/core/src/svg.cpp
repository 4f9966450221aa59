#include "roledyn/svg.hpp"

#include <array>
#include <sstream>

#include "roledyn/errors.hpp"
#include "roledyn/text.hpp"

namespace roledyn::svg {

namespace {

constexpr std::array<std::string_view, 10> kPalette = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
                                                       "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};

std::string num(double v) { return text::format_fixed(v, 3); }

void open_svg(std::ostringstream& out, double width, double height) {
  out << "<?xml version=\"1.0\" encoding=\"UTF-8\" standalone=\"no\"?>\n"
      << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" << num(width) << "\" height=\""
      << num(height) << "\" viewBox=\"0 0 " << num(width) << ' ' << num(height) << "\">\n"
      << "<rect x=\"0\" y=\"0\" width=\"" << num(width) << "\" height=\"" << num(height)
      << "\" fill=\"#ffffff\"/>\n";
}

std::string role_label(std::span<const std::string> labels, std::size_t k) {
  std::string base = "role " + std::to_string(k);
  if (k < labels.size() && !labels[k].empty()) base += ": " + labels[k];
  return base;
}

}  // namespace

std::string_view role_color(std::size_t role) { return kPalette[role % kPalette.size()]; }

std::string escape_xml(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      case '\'': out += "&apos;"; break;
      default: out += c;
    }
  }
  return out;
}

double NetworkLayout::x(std::size_t t, std::size_t t_max) {
  if (t_max <= 1) return kLeft + plot_width() / 2;
  return kLeft + plot_width() * static_cast<double>(t - 1) / static_cast<double>(t_max - 1);
}

double NetworkLayout::y(double value) { return kTop + plot_height() * (1.0 - value); }

std::string plot_network_dynamics(const RoleImportanceSeries& series, std::span<const std::string> labels) {
  const auto T = static_cast<std::size_t>(series.values.rows());
  const auto r = static_cast<std::size_t>(series.values.cols());
  if (T == 0 || r == 0) throw ArgumentError("plot_network_dynamics needs a non-empty series");
  using L = NetworkLayout;
  std::ostringstream out;
  open_svg(out, L::kWidth, L::kHeight);

  // Axes with ticks at 0, 0.5 and 1 and at every timestep.
  out << "<g id=\"axes\" stroke=\"#000000\" stroke-width=\"1\" fill=\"none\">\n";
  out << "<path d=\"M" << num(L::kLeft) << ' ' << num(L::y(1)) << " L" << num(L::kLeft) << ' ' << num(L::y(0))
      << " L" << num(L::kLeft + L::plot_width()) << ' ' << num(L::y(0)) << "\"/>\n";
  out << "</g>\n<g id=\"ticks\" font-family=\"sans-serif\" font-size=\"10\" fill=\"#000000\">\n";
  for (double v : {0.0, 0.5, 1.0})
    out << "<text x=\"" << num(L::kLeft - 6) << "\" y=\"" << num(L::y(v) + 3) << "\" text-anchor=\"end\">"
        << text::format_fixed(v, 1) << "</text>\n";
  for (std::size_t t = 1; t <= T; ++t)
    out << "<text x=\"" << num(L::x(t, T)) << "\" y=\"" << num(L::y(0) + 14) << "\" text-anchor=\"middle\">" << t
        << "</text>\n";
  out << "<text x=\"" << num(L::kLeft + L::plot_width() / 2) << "\" y=\"" << num(L::kHeight - 6)
      << "\" text-anchor=\"middle\">timestep</text>\n</g>\n";

  out << "<g id=\"traces\" fill=\"none\" stroke-width=\"2\">\n";
  for (std::size_t k = 0; k < r; ++k) {
    out << "<path id=\"role-" << k << "\" stroke=\"" << role_color(k) << "\" d=\"";
    bool pen_down = false;
    for (std::size_t t = 1; t <= T; ++t) {
      if (t - 1 < series.empty.size() && series.empty[t - 1]) {
        pen_down = false;
        continue;
      }
      const double v = series.values(static_cast<Eigen::Index>(t - 1), static_cast<Eigen::Index>(k));
      out << (pen_down ? " L" : (t == 1 ? "M" : " M")) << num(L::x(t, T)) << ' ' << num(L::y(v));
      pen_down = true;
    }
    out << "\"/>\n";
  }
  out << "</g>\n<g id=\"legend\" font-family=\"sans-serif\" font-size=\"11\">\n";
  for (std::size_t k = 0; k < r; ++k) {
    const double ly = L::kTop + 16.0 * static_cast<double>(k);
    const double lx = L::kWidth - L::kRight + 12;
    out << "<rect x=\"" << num(lx) << "\" y=\"" << num(ly) << "\" width=\"10\" height=\"10\" fill=\""
        << role_color(k) << "\"/>\n<text x=\"" << num(lx + 14) << "\" y=\"" << num(ly + 9) << "\">"
        << escape_xml(role_label(labels, k)) << "</text>\n";
  }
  out << "</g>\n</svg>\n";
  return out.str();
}

std::string plot_node_dynamics(std::span<const NodeTrajectory> trajectories, std::span<const std::string> node_labels,
                               std::span<const std::string> role_labels) {
  if (trajectories.empty()) throw ArgumentError("plot_node_dynamics needs at least one trajectory");
  if (node_labels.size() != trajectories.size()) throw ArgumentError("plot_node_dynamics: one label per trajectory");
  using L = NodeLayout;
  std::size_t T = 0, r = 0;
  for (const auto& tr : trajectories) {
    T = std::max(T, tr.memberships.size());
    for (const auto& m : tr.memberships)
      if (m) r = std::max(r, static_cast<std::size_t>(m->size()));
  }
  const double width = L::cell_x(T + 1) + 20;
  const double height = L::band_top(trajectories.size()) + L::kLegendHeight + 16.0 * static_cast<double>(r);
  std::ostringstream out;
  open_svg(out, width, height);

  out << "<g id=\"labels\" font-family=\"sans-serif\" font-size=\"11\" fill=\"#000000\">\n";
  for (std::size_t i = 0; i < trajectories.size(); ++i)
    out << "<text x=\"" << num(L::kLeft - 6) << "\" y=\"" << num(L::band_top(i) + L::kBandHeight / 2 + 4)
        << "\" text-anchor=\"end\">" << escape_xml(node_labels[i]) << "</text>\n";
  out << "</g>\n<g id=\"bands\" stroke=\"none\">\n";
  for (std::size_t i = 0; i < trajectories.size(); ++i) {
    const auto& tr = trajectories[i];
    const double top = L::band_top(i);
    for (std::size_t t = 1; t <= T; ++t) {
      const double x = L::cell_x(t);
      const std::string id = "n" + std::to_string(i) + "-t" + std::to_string(t);
      const bool active = t - 1 < tr.memberships.size() && tr.memberships[t - 1].has_value();
      const double total = active ? tr.memberships[t - 1]->sum() : 0.0;
      if (!active || total <= 0) {
        out << "<rect id=\"" << id << (active ? "-zero" : "-off") << "\" x=\"" << num(x) << "\" y=\"" << num(top)
            << "\" width=\"" << num(L::kCellWidth) << "\" height=\"" << num(L::kBandHeight)
            << "\" fill=\"#ffffff\"/>\n";
        continue;
      }
      const auto& row = *tr.memberships[t - 1];
      double y = top;
      for (Eigen::Index k = 0; k < row.size(); ++k) {
        const double h = row[k] / total * L::kBandHeight;
        if (h <= 0) continue;
        out << "<rect id=\"" << id << "-r" << k << "\" x=\"" << num(x) << "\" y=\"" << num(y) << "\" width=\""
            << num(L::kCellWidth) << "\" height=\"" << num(h) << "\" fill=\""
            << role_color(static_cast<std::size_t>(k)) << "\"/>\n";
        y += h;
      }
    }
    out << "<rect x=\"" << num(L::kLeft) << "\" y=\"" << num(top) << "\" width=\""
        << num(L::kCellWidth * static_cast<double>(T)) << "\" height=\"" << num(L::kBandHeight)
        << "\" fill=\"none\" stroke=\"#999999\" stroke-width=\"0.5\"/>\n";
  }
  out << "</g>\n<g id=\"legend\" font-family=\"sans-serif\" font-size=\"11\">\n";
  const double legend_top = L::band_top(trajectories.size()) + 10;
  for (std::size_t k = 0; k < r; ++k) {
    const double ly = legend_top + 16.0 * static_cast<double>(k);
    out << "<rect x=\"" << num(L::kLeft) << "\" y=\"" << num(ly) << "\" width=\"10\" height=\"10\" fill=\""
        << role_color(k) << "\"/>\n<text x=\"" << num(L::kLeft + 14) << "\" y=\"" << num(ly + 9) << "\">"
        << escape_xml(role_label(role_labels, k)) << "</text>\n";
  }
  out << "</g>\n</svg>\n";
  return out.str();
}

}  // namespace roledyn::svg
