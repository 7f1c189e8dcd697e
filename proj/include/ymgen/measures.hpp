#pragma once

#include <array>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "ymgen/algebra.hpp"

namespace ymgen {

struct Atom {
  double weight = 0.0;
  StatePoint point;
};

class DiscreteMeasure {
 public:
  DiscreteMeasure() = default;
  explicit DiscreteMeasure(std::vector<Atom> atoms);  // validates
  static DiscreteMeasure dirac(const StatePoint& w);

  int dim() const { return atoms_.front().point.dim(); }
  const std::vector<Atom>& atoms() const { return atoms_; }
  size_t size() const { return atoms_.size(); }

  StatePoint barycentre() const;
  double expect(const std::function<double(const StatePoint&)>& f) const;
  DiscreteMeasure translated(const StatePoint& w) const;
  DiscreteMeasure merged(double radius) const;

 private:
  std::vector<Atom> atoms_;
};

// Concentration: density alpha of lambda on a cell plus the angle measure.
struct AngleAtom {
  double weight = 0.0;
  SpherePoint point;
};

struct ConcentrationPart {
  double alpha = 0.0;
  std::vector<AngleAtom> angle_atoms;

  bool active() const { return alpha > 0.0; }
  void validate(int d) const;
  StatePoint u_moment() const;  // sum tau_j (v_j, u_j), used for the barycentre with alpha
};

struct Cell {
  DiscreteMeasure osc;
  ConcentrationPart conc;
};

// Axis-aligned box in space-time; the last coordinate is time.
struct Box {
  std::array<double, kMaxDim + 1> lo{};
  std::array<double, kMaxDim + 1> hi{};
  int dims = 0;
  double volume() const;
};

class GeneralizedYM {
 public:
  GeneralizedYM() = default;
  // Lattice k in space, time slabs of width 1/k (T*k must be an integer).
  GeneralizedYM(int d, double T, int k, std::vector<Cell> cells);
  static GeneralizedYM homogeneous(int d, double T, int k, const Cell& cell);

  int dim() const { return d_; }
  double horizon() const { return T_; }
  int lattice() const { return k_; }
  int time_slabs() const { return nt_; }
  int spatial_cells() const { return ns_; }
  size_t size() const { return cells_.size(); }

  const Cell& cell(size_t i) const { return cells_[i]; }
  Cell& cell(size_t i) { return cells_[i]; }
  const std::vector<Cell>& cells() const { return cells_; }

  // index = slab * spatial_cells + spatial index; x_0 varies fastest.
  size_t index(const std::array<int, kMaxDim>& x, int slab) const;
  Box cell_box(size_t i) const;
  double cell_volume() const;
  double spatial_cell_volume() const;
  int slab_of(size_t i) const { return static_cast<int>(i / ns_); }
  std::array<int, kMaxDim> spatial_coords(size_t i) const;

  bool same_domain(const GeneralizedYM& o) const;
  bool has_concentration() const;

 private:
  int d_ = 0;
  double T_ = 1.0;
  int k_ = 1;
  int nt_ = 1;
  int ns_ = 1;
  std::vector<Cell> cells_;
};

class TestFunction {
 public:
  using Eval = std::function<double(const StatePoint&)>;

  TestFunction() = default;
  TestFunction(std::string name, Eval f, std::optional<Eval> recession, bool convex);

  const std::string& name() const { return name_; }
  double operator()(const StatePoint& w) const { return f_(w); }
  bool has_recession() const { return rec_.has_value(); }
  bool is_convex() const { return convex_; }
  // f_inf on a sphere point; rec_ is 2-homogeneous so it also accepts any point.
  double recession(const SpherePoint& z) const;
  double recession_raw(const StatePoint& w) const { return (*rec_)(w); }

 private:
  std::string name_;
  Eval f_;
  std::optional<Eval> rec_;
  bool convex_ = false;
};

double recession_eval(const TestFunction& f, const StatePoint& w);

// Standard state functions.
TestFunction tf_constant(double c);
TestFunction tf_velocity(int i);
TestFunction tf_stress(int k);  // k-th stored entry of u
TestFunction tf_kinetic();      // |v|^2
TestFunction tf_energy();       // e(v,u)
TestFunction tf_defect();       // |u - v o v|, Frobenius
TestFunction tf_linear(const Vec& a, const TracelessSym& b);
TestFunction tf_max_affine(std::vector<Vec> a, std::vector<TracelessSym> b, std::vector<double> c);

// Separable cosine bumps in normalized coordinates s in [0,1]^{d+1} (time scaled by T).
struct SpatialBump {
  std::array<double, kMaxDim + 1> centre{};
  double radius = 0.5;  // <= 0.5 means compact bump; 0 encodes the constant 1
  bool constant = false;

  double value(const std::array<double, kMaxDim + 1>& s, int dims) const;
  // Integral over a box in normalized coordinates.
  double integral(const Box& b, int dims) const;
};

struct BankEntry {
  SpatialBump bump;
  TestFunction f;
  std::string label;
};

class TestBank {
 public:
  TestBank(int d, unsigned seed = 20240607u);

  int dim() const { return d_; }
  size_t size() const { return entries_.size(); }
  const BankEntry& entry(size_t i) const { return entries_[i]; }
  const std::vector<TestFunction>& functions() const { return functions_; }
  const std::vector<SpatialBump>& bumps() const { return bumps_; }

 private:
  int d_;
  std::vector<SpatialBump> bumps_;
  std::vector<TestFunction> functions_;
  std::vector<BankEntry> entries_;
};

// Pairings.
double pair(const GeneralizedYM& ym, const TestFunction& f);
double pair_weighted(const GeneralizedYM& ym, const SpatialBump& phi, const TestFunction& f);
std::vector<double> bank_pairings(const GeneralizedYM& ym, const TestBank& bank);
double bank_distance(const std::vector<double>& a, const std::vector<double>& b);
double ym_distance(const GeneralizedYM& a, const GeneralizedYM& b, const TestBank& bank);
double ym_distance(const GeneralizedYM& a, const GeneralizedYM& b);

std::vector<StatePoint> barycentre(const GeneralizedYM& ym);
GeneralizedYM shift(const GeneralizedYM& ym, const std::vector<StatePoint>& w_field);
std::vector<double> energy_profile(const GeneralizedYM& ym);

// Velocity-space measures: atoms xi in R^d, angle atoms on S^{d-1}.
struct VelocityFunction {
  std::function<double(const Vec&)> f;
  std::function<double(const Vec&)> recession;  // on unit vectors
};

struct VelocityCell {
  std::vector<std::pair<double, Vec>> atoms;
  double alpha = 0.0;
  std::vector<std::pair<double, Vec>> angles;
};

struct VelocityMeasure {
  int d = 2;
  double T = 1.0;
  int k = 1;
  std::vector<VelocityCell> cells;  // same cell order as GeneralizedYM
};

GeneralizedYM lift_measure(const VelocityMeasure& vm);
VelocityFunction compose_lift(const TestFunction& f);
double pair_velocity(const VelocityMeasure& vm, const VelocityFunction& g);
std::vector<double> velocity_energy_profile(const VelocityMeasure& vm);

}  // namespace ymgen
