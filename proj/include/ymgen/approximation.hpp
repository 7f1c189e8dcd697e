#pragma once

#include <functional>
#include <string>
#include <vector>

#include "ymgen/measures.hpp"

namespace ymgen {

struct PipelineParams {
  double m = 1e6;        // oscillation-embedding index
  double rho = 1e3;      // truncation radius
  double eps = 1e-3;     // mollification width
  int l = 0;             // averaging lattice, 0 means twice the input lattice
  int mollify_k = 0;     // lattice of the mollified measure, 0 means 2*l
  double quant_h = 0.0;  // quantization bin width, 0 disables

  void validate(double T) const;
};

DiscreteMeasure oscillation_embed(const DiscreteMeasure& nu, const ConcentrationPart& c, double m);

// Moves mass outside B_rho to the origin, then re-centres to `target`
// (zero by default).
DiscreteMeasure truncate(const DiscreteMeasure& nu, double rho);
DiscreteMeasure truncate(const DiscreteMeasure& nu, double rho, const StatePoint& target);
double truncation_ramp(double r, double rho);

DiscreteMeasure quantize(const std::vector<Atom>& cloud, double h);

// Normalized bump exp(-1/(1-s^2)) on (-1,1) and its distribution function.
double mollifier_bump(double s);
double mollifier_cdf(double s);

GeneralizedYM mollify(const GeneralizedYM& ym, double eps, int out_k = 0);
GeneralizedYM lattice_average(const GeneralizedYM& ym, int l);

struct DiagonalSelection {
  std::vector<int> index;       // -1 where the tolerance was not reached
  std::vector<double> distance; // distance at the selected index (or the best available)
  bool complete = true;
};

// dist[k][n]: distance of stage (k, n) to the k-th limit.
DiagonalSelection diagonal_select(const std::vector<std::vector<double>>& dist,
                                  const std::function<double(int)>& tol);
DiagonalSelection diagonal_select(const std::vector<std::vector<GeneralizedYM>>& family,
                                  const std::vector<GeneralizedYM>& limits,
                                  const std::function<double(int)>& tol, const TestBank& bank);

struct StageReport {
  std::string stage;
  double distance = 0.0;        // ym_distance to the input measure
  double max_slab_energy = 0.0;
  size_t atoms = 0;             // total oscillation atoms
  int lattice = 0;
};

struct PipelineResult {
  GeneralizedYM discrete;             // zero-barycentre cells, lattice l, classical
  std::vector<StatePoint> field;      // per-cell barycentre
  GeneralizedYM reconstructed;        // shift(discrete, field)
  std::vector<StageReport> stages;
  double target_esssup_energy = 0.0;
};

PipelineResult reduce_to_discrete(const GeneralizedYM& ym, const PipelineParams& params);

}  // namespace ymgen
