#pragma once

#include <array>
#include <complex>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

#include "ymgen/grid_field.hpp"
#include "ymgen/measures.hpp"

namespace ymgen {

// [[u + qI, v], [v^T, 0]]
SymMatrix lifted_matrix(const StatePoint& w, double q);
// det of lifted_matrix(w, q), expanded as -v^T adj(u + qI) v
double lifted_det(const StatePoint& w, double q);
double pressure_root(const StatePoint& wbar);

struct WaveSpec {
  StatePoint wbar;
  double qbar = 0.0;
  SymMatrix U;
  Vec eta;                                 // unit, U eta = 0, not the time axis
  std::vector<std::pair<double, Vec>> eigs;  // U restricted to eta-perp

  int dim() const { return wbar.dim(); }
  void check() const;
};

WaveSpec wave_direction(const StatePoint& wbar, double qbar);
WaveSpec make_wave(const StatePoint& wbar);
// Wave data for a prescribed kernel direction; throws unless U eta = 0.
WaveSpec wave_with_direction(const StatePoint& wbar, double qbar, const Vec& eta);

// Constant-coefficient operator U_ij = K_ijkl d_k d_l phi. Every output is
// symmetric, divergence-free in both indices, has zero (d+1,d+1) entry, and
// K[eta eta^T] = U.
class PotentialSymbol {
 public:
  explicit PotentialSymbol(const WaveSpec& ws);
  PotentialSymbol(const SymMatrix& U, const Vec& eta);

  int size() const { return n_; }
  double operator()(int i, int j, int k, int l) const { return k_[((i * 4 + j) * 4 + k) * 4 + l]; }
  SymMatrix apply(const SymMatrix& hessian) const;
  // Complex symbol version: sum_kl K_ijkl s_k s_l.
  void apply(const std::array<std::complex<double>, kMaxDim + 1>& s,
             std::array<std::complex<double>, 16>& out) const;

 private:
  int n_ = 0;
  std::array<double, 256> k_{};
};

struct OscillationProfile {
  double mu1 = 0.5, mu2 = 0.5, delta = 0.0;
  int modes = 0;
  std::vector<std::complex<double>> h_hat;  // n = 0..modes
  std::vector<std::complex<double>> H_hat;  // second antiderivative, mean zero
  double truncation_bound = 0.0;

  double h(double s) const;
  double H(double s) const;
  double H2(double s) const;  // termwise second derivative of H
};

OscillationProfile staircase_profile(double mu1, double mu2, double delta, int modes = 0);
// Mollified step evaluated by direct convolution with the bump distribution function.
double staircase_reference(double mu1, double mu2, double delta, double s);

// Hessian jet of a smooth function on space-time.
using HessianJet = std::function<SymMatrix(const std::array<double, kMaxDim + 1>& y)>;
GridField potential_apply(const PotentialSymbol& K, const HessianJet& phi, const Grid& g);
// Grid potential with the derivative convention of `stencil`.
GridField potential_apply(const PotentialSymbol& K, const ScalarGrid& phi, Stencil stencil);

struct Cube {
  std::array<int, kMaxDim + 1> corner{};
  int side = 0;
};

struct CubeSet {
  std::vector<Cube> cubes;
  double region_volume = 0.0;
  double covered_volume = 0.0;
  bool depth_limited = false;

  double uncovered() const { return region_volume - covered_volume; }
};

// Index-space box on the grid; only cut axes need to vanish near the box ends.
struct Region {
  std::array<int, kMaxDim + 1> lo{};
  std::array<int, kMaxDim + 1> len{};
  std::array<bool, kMaxDim + 1> cut{};

  static Region full(const Grid& g, bool time_cut);
  size_t points(int axes) const;
};

// Disjoint dyadic index cubes inside {p in region : inside(p)}, largest first,
// until the uncovered volume drops below eps or cubes reach min_side.
CubeSet cube_exhaustion(const Grid& g, const Region& region, const std::function<bool(size_t)>& inside,
                        double eps, int min_side = 1);

// Integer grid direction whose physical direction is parallel to the wave.
struct LatticeDirection {
  std::array<int, kMaxDim + 1> n{};
  Vec m;                 // n_a / h_a
  double angle = 0.0;    // to the requested eta
};

LatticeDirection lattice_direction(const Vec& eta, const Grid& g, int max_entry = 4);

struct RationalWave {
  WaveSpec ws;                // for the adjusted amplitude
  LatticeDirection dir;
  double perturbation = 0.0;  // |adjusted - requested amplitude|
};

// Nearest amplitude whose wave direction is a lattice direction.
RationalWave rationalize(const StatePoint& wbar, const Grid& g, int max_entry = 4);

struct SynthesisParams {
  int k = 0;                 // leaf frequency in periods per unit length, 0 = finest
  double delta = 1.5;        // cutoff ramp width in wavelengths
  double eps = 0.05;
  bool time_compact = false; // vanish near t = 0 and t = T
  unsigned seed = 1;
  int max_entry = 4;
  bool strict = true;        // reject outputs whose labelled fractions miss eps

  void validate() const;
  nlohmann::json to_json() const;
};

struct LevelReport {
  int level = 0;
  int region_count = 0;
  std::array<int, kMaxDim + 1> direction{};
  int period = 0;
  double perturbation = 0.0;
  double covered = 0.0;  // fraction of the host plateau that received nested fields
};

struct SynthesisReport {
  std::vector<Atom> target;
  std::vector<Atom> effective;     // atoms after direction adjustment and span perturbation
  std::vector<double> predicted;   // labelled volume fraction per atom
  double perturbation = 0.0;
  std::array<int, kMaxDim + 1> orientation{1, 1, 1, 1};  // difference direction per axis
  std::vector<LevelReport> levels;
  double sup_norm = 0.0;
  double uniform_constant = 0.0;   // sup|w| / <nu, e>

  nlohmann::json to_json() const;
};

struct Synthesis {
  GridField field;
  std::vector<int8_t> labels;  // atom index where the field equals that atom, else -1
  SynthesisReport report;
};

Synthesis two_atom_field(const StatePoint& w1, const StatePoint& w2, double mu1, double mu2, const Grid& g,
                         const SynthesisParams& p);
Synthesis n_atom_field(const DiscreteMeasure& nu, const Grid& g, const SynthesisParams& p);

}  // namespace ymgen
