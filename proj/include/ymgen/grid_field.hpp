#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "ymgen/algebra.hpp"

namespace ymgen {

// How derivatives act on a grid field. Forward means one-sided differences,
// oriented per axis by GridField::orientation().
enum class Stencil { Spectral, Forward };
std::string to_string(Stencil s);
Stencil stencil_from_string(const std::string& s);

// Periodic space-time grid: nx points per spatial axis on [0,1), nt points on [0,T).
struct Grid {
  int d = 2;
  int nx = 64;
  int nt = 64;
  double T = 1.0;

  int axes() const { return d + 1; }
  int extent(int axis) const { return axis < d ? nx : nt; }
  double spacing(int axis) const { return axis < d ? 1.0 / nx : T / nt; }
  double length(int axis) const { return axis < d ? 1.0 : T; }
  size_t points() const;
  size_t spatial_points() const;
  double cell_volume() const;
  // x_0 fastest, time slowest
  size_t index(const std::array<int, kMaxDim + 1>& i) const;
  std::array<int, kMaxDim + 1> coords(size_t p) const;
  // sample location (cell centre)
  double position(int axis, int i) const { return (i + 0.5) * spacing(axis); }
  void validate() const;
};

class ScalarGrid {
 public:
  explicit ScalarGrid(const Grid& g) : grid_(g), data_(g.points(), 0.0) {}
  const Grid& grid() const { return grid_; }
  double& operator[](size_t p) { return data_[p]; }
  double operator[](size_t p) const { return data_[p]; }
  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }

 private:
  Grid grid_;
  std::vector<double> data_;
};

// Channels per point: v (d), stored entries of u, q.
class GridField {
 public:
  GridField() = default;
  GridField(const Grid& g, Stencil s);

  const Grid& grid() const { return grid_; }
  Stencil stencil() const { return stencil_; }
  // +1: (f(i+1) - f(i))/h, -1: (f(i) - f(i-1))/h
  const std::array<int, kMaxDim + 1>& orientation() const { return orientation_; }
  void set_orientation(const std::array<int, kMaxDim + 1>& o);
  int channels() const { return channels_; }
  size_t points() const { return grid_.points(); }

  StatePoint state(size_t p) const;
  double pressure(size_t p) const { return data_[p * channels_ + channels_ - 1]; }
  void set(size_t p, const StatePoint& w, double q);
  void add(size_t p, const StatePoint& w, double q);
  // lifted (d+1)x(d+1) matrix [[u+qI, v],[v^T, 0]]
  SymMatrix lifted(size_t p) const;
  void add_lifted(size_t p, const SymMatrix& U);

  double* raw(size_t p) { return data_.data() + p * channels_; }
  const double* raw(size_t p) const { return data_.data() + p * channels_; }
  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }

  nlohmann::json& provenance() { return provenance_; }
  const nlohmann::json& provenance() const { return provenance_; }

  void write(const std::string& path) const;
  static GridField read(const std::string& path);

 private:
  Grid grid_;
  Stencil stencil_ = Stencil::Forward;
  std::array<int, kMaxDim + 1> orientation_{1, 1, 1, 1};
  int channels_ = 0;
  std::vector<double> data_;
  nlohmann::json provenance_ = nlohmann::json::object();
};

}  // namespace ymgen
