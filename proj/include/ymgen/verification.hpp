#pragma once

#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

#include "ymgen/grid_field.hpp"
#include "ymgen/measures.hpp"

namespace ymgen {

struct Residual {
  double max_div = 0.0;          // |s'.v^| over modes
  double max_offparallel = 0.0;  // momentum residual orthogonal to s'
  double mean_div = 0.0;
  double mean_offparallel = 0.0;
};

// Fourier-mode residual of div v = 0 and d_t v + div u + grad q = 0, using
// the derivative symbol declared by the field, normalized by max|s| * |w|_2.
Residual subsolution_residual(const GridField& f);

struct Pairing {
  double value = 0.0;
  double quadrature_error = 0.0;  // |full - every-other-point| estimate
};

Pairing empirical_pairing(const GridField& f, const TestFunction& fn);
Pairing empirical_pairing(const GridField& f, const TestFunction& fn, const SpatialBump& weight);
// Field pairings in bank order, comparable with bank_pairings of a measure.
std::vector<double> field_bank_pairings(const GridField& f, const TestBank& bank);

struct SliceCheck {
  std::vector<double> slack;  // per time slice
  double max_slack = 0.0;
  bool pass = false;
};

SliceCheck timeslice_convex_check(const GridField& f, const TestFunction& fn, double target, double eps);

struct Fractions {
  std::vector<double> total;                // per atom
  std::vector<std::vector<double>> slices;  // [slice][atom]
  double max_error = 0.0;                   // total vs weights
  double max_slice_error = 0.0;             // slices with t in (eps T, (1-eps) T)
};

double default_state_tolerance(const std::vector<Atom>& atoms);
Fractions volume_fractions(const GridField& f, const std::vector<Atom>& atoms, double tol_state, double eps);

double euler_defect(const GridField& f);
std::vector<double> energy_timeseries(const GridField& f);
double sup_norm(const GridField& f);

struct VerifyParams {
  double eps = 0.05;
  double residual_threshold = 1e-8;
  double tol_state = 0.0;  // 0 selects default_state_tolerance
  bool check_fractions = true;
};

struct Criterion {
  std::string name;
  double value = 0.0;
  double threshold = 0.0;
  bool pass = false;
};

struct VerificationReport {
  int version = 1;
  Residual residual;
  std::vector<std::string> pairing_labels;
  std::vector<double> pairing_errors;
  double pairing_distance = 0.0;
  SliceCheck energy_check;
  Fractions fractions;
  double euler_defect = 0.0;
  double defect_target = 0.0;
  std::vector<double> energy;
  double sup_norm = 0.0;
  double sup_bound = 0.0;
  double uniform_constant = 0.0;
  std::vector<Criterion> criteria;

  bool pass() const;
  nlohmann::json to_json() const;
  std::string energy_csv(double T) const;
};

// Full check of a field against a homogeneous zero-barycentre target.
VerificationReport verify_field(const GridField& f, const DiscreteMeasure& target, const TestBank& bank,
                                const VerifyParams& p);

struct GenerationRow {
  int k = 0;
  VerificationReport report;
};

struct GenerationStudy {
  std::vector<GenerationRow> rows;
  bool monotone = false;  // pairing distance non-increasing in k, up to 1e-14

  std::string csv() const;
};

// Fields are produced one at a time by `make(k)`.
GenerationStudy generation_report(const std::vector<int>& ks, const std::function<GridField(int)>& make,
                                  const DiscreteMeasure& target, const TestBank& bank, const VerifyParams& p);

}  // namespace ymgen
