#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "roledyn/dynamics.hpp"

namespace roledyn::svg {

/// Fixed role palette; role k always gets palette[k % size].
std::string_view role_color(std::size_t role);

std::string escape_xml(std::string_view s);

/// Coordinate layout of the network-dynamics chart. Timestep t (1-based) sits
/// at x(t); an importance value v at y(v). All coordinates are written with
/// three decimals.
struct NetworkLayout {
  static constexpr double kWidth = 720;
  static constexpr double kHeight = 360;
  static constexpr double kLeft = 60;
  static constexpr double kRight = 180;  // legend column
  static constexpr double kTop = 20;
  static constexpr double kBottom = 40;

  static double plot_width() { return kWidth - kLeft - kRight; }
  static double plot_height() { return kHeight - kTop - kBottom; }
  static double x(std::size_t t, std::size_t t_max);
  static double y(double value);
};

/// One trace per role: a path with id "role-k" through (x(t), y(x_t[k])),
/// broken at empty timesteps. Legend entries use `labels` when given.
std::string plot_network_dynamics(const RoleImportanceSeries& series, std::span<const std::string> labels = {});

/// Layout of the node-dynamics chart: node i occupies the band
/// [band_top(i), band_top(i) + kBandHeight); timestep t the column
/// [cell_x(t), cell_x(t) + kCellWidth).
struct NodeLayout {
  static constexpr double kLeft = 120;
  static constexpr double kTop = 20;
  static constexpr double kBandHeight = 20;
  static constexpr double kBandGap = 4;
  static constexpr double kCellWidth = 24;
  static constexpr double kLegendHeight = 30;

  static double band_top(std::size_t i) { return kTop + static_cast<double>(i) * (kBandHeight + kBandGap); }
  static double cell_x(std::size_t t) { return kLeft + static_cast<double>(t - 1) * kCellWidth; }
};

/// Per node a band of stacked role proportions per timestep; segment rects
/// carry id "n{i}-t{t}-r{k}" and height proportion·kBandHeight, stacked from
/// the band top in role order. Inactive timesteps are a white rect with id
/// "n{i}-t{t}-off".
std::string plot_node_dynamics(std::span<const NodeTrajectory> trajectories, std::span<const std::string> node_labels,
                               std::span<const std::string> role_labels = {});

}  // namespace roledyn::svg
