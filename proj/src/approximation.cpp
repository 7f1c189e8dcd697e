#include "ymgen/approximation.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>

namespace ymgen {

void PipelineParams::validate(double T) const {
  if (!(m > 1.0)) throw InputError("pipeline: m must exceed 1");
  if (!(rho > 0.0)) throw InputError("pipeline: rho must be positive");
  if (!(eps > 0.0) || !(eps < T / 2)) throw InfeasibleError("pipeline: eps must lie in (0, T/2)");
  if (l < 0 || mollify_k < 0) throw InputError("pipeline: lattices must be positive");
  if (quant_h < 0.0) throw InputError("pipeline: quantization width must be nonnegative");
}

// ---- Step 1

DiscreteMeasure oscillation_embed(const DiscreteMeasure& nu, const ConcentrationPart& c, double m) {
  if (!(m > 1.0)) throw InputError("oscillation_embed: m must exceed 1");
  const int d = nu.dim();
  c.validate(d);
  StatePoint bary = nu.barycentre();
  double scale = 1.0;
  for (const Atom& a : nu.atoms()) scale = std::max(scale, a.point.norm());
  if (c.active()) {
    bary.u += c.alpha * c.u_moment().u;
    scale = std::max(scale, c.alpha);
  }
  if (bary.norm() > 1e-10 * scale) throw InputError("oscillation_embed: combined barycentre is not zero");
  if (!c.active()) return nu;

  std::vector<Atom> atoms;
  for (const Atom& a : nu.atoms()) atoms.push_back({(1.0 - 1.0 / m) * a.weight, a.point});
  double sv = std::sqrt(c.alpha * m), su = c.alpha * m;
  for (const AngleAtom& a : c.angle_atoms)
    atoms.push_back({a.weight / m, StatePoint(sv * a.point.base().v, su * a.point.base().u)});
  DiscreteMeasure out(std::move(atoms));
  return out.translated(-out.barycentre());
}

// ---- Step 3

double truncation_ramp(double r, double rho) {
  if (r <= rho) return 1.0;
  if (r >= rho + 1.0) return 0.0;
  double s = r - rho;
  return 1.0 - s * s * (3.0 - 2.0 * s);
}

DiscreteMeasure truncate(const DiscreteMeasure& nu, double rho) { return truncate(nu, rho, StatePoint(nu.dim())); }

DiscreteMeasure truncate(const DiscreteMeasure& nu, double rho, const StatePoint& target) {
  if (!(rho > 0.0)) throw InputError("truncate: rho must be positive");
  std::vector<Atom> atoms;
  double moved = 0.0;
  for (const Atom& a : nu.atoms()) {
    double r = truncation_ramp(a.point.norm(), rho);
    if (r > 0.0) atoms.push_back({r * a.weight, a.point});
    moved += (1.0 - r) * a.weight;
  }
  if (moved == 0.0) {
    StatePoint gap = target - nu.barycentre();
    if (gap.norm() == 0.0) return nu;
    return nu.translated(gap);
  }
  bool merged = false;
  for (Atom& a : atoms)
    if (a.point.is_zero()) {
      a.weight += moved;
      merged = true;
    }
  if (!merged) atoms.push_back({moved, StatePoint(nu.dim())});
  DiscreteMeasure out(std::move(atoms));
  return out.translated(target - out.barycentre());
}

// ---- Step 2

DiscreteMeasure quantize(const std::vector<Atom>& cloud, double h) {
  if (cloud.empty()) throw InputError("quantize: empty cloud");
  if (!(h > 0.0)) throw InputError("quantize: bin width must be positive");
  const int d = cloud.front().point.dim();
  const int fc = TracelessSym::free_count(d);
  std::map<std::vector<long long>, double> bins;
  double total = 0.0;
  for (const Atom& a : cloud) {
    if (!(a.weight > 0.0)) throw InputError("quantize: weights must be positive");
    std::vector<long long> key;
    for (int i = 0; i < d; ++i) key.push_back(static_cast<long long>(std::floor(a.point.v[i] / h)));
    for (int k = 0; k < fc; ++k) key.push_back(static_cast<long long>(std::floor(a.point.u.free_at(k) / h)));
    bins[key] += a.weight;
    total += a.weight;
  }
  std::vector<Atom> atoms;
  for (const auto& [key, w] : bins) {
    StatePoint p(d);
    for (int i = 0; i < d; ++i) p.v[i] = (key[i] + 0.5) * h;
    for (int k = 0; k < fc; ++k) p.u.free_at(k) = (key[d + k] + 0.5) * h;
    atoms.push_back({w / total, p});
  }
  DiscreteMeasure out(std::move(atoms));
  return out.translated(-out.barycentre());
}

// ---- Step 4

namespace {

// Gauss-Legendre nodes/weights on [-1,1] by Newton iteration.
struct GaussLegendre {
  std::vector<double> x, w;
  explicit GaussLegendre(int n) : x(n), w(n) {
    for (int i = 0; i < n; ++i) {
      double z = std::cos(M_PI * (i + 0.75) / (n + 0.5));
      for (int it = 0; it < 100; ++it) {
        double p0 = 1.0, p1 = z;
        for (int k = 2; k <= n; ++k) {
          double p2 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / k;
          p0 = p1;
          p1 = p2;
        }
        double dp = n * (z * p1 - p0) / (z * z - 1.0);
        double dz = p1 / dp;
        z -= dz;
        if (std::abs(dz) < 1e-16) break;
      }
      double p0 = 1.0, p1 = z;
      for (int k = 2; k <= n; ++k) {
        double p2 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      double dp = n * (z * p1 - p0) / (z * z - 1.0);
      x[i] = z;
      w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
    }
  }
  template <class F>
  double integrate(F&& f, double a, double b) const {
    double c = 0.5 * (a + b), h = 0.5 * (b - a), s = 0.0;
    for (size_t i = 0; i < x.size(); ++i) s += w[i] * f(c + h * x[i]);
    return s * h;
  }
};

const GaussLegendre& gl64() {
  static const GaussLegendre g(64);
  return g;
}

double raw_bump(double s) { return std::abs(s) < 1.0 ? std::exp(-1.0 / (1.0 - s * s)) : 0.0; }

double bump_mass() {
  static const double z = gl64().integrate(raw_bump, -1.0, 1.0);
  return z;
}

// Composite rule for the outer average over an output cell.
template <class F>
double cell_average(F&& f, double a, double b) {
  static const GaussLegendre g(16);
  const int panels = 8;
  double h = (b - a) / panels, s = 0.0;
  for (int p = 0; p < panels; ++p) s += g.integrate(f, a + p * h, a + (p + 1) * h);
  return s / (b - a);
}

// W[o][c] for spatial axes on the unit torus.
std::vector<std::vector<double>> space_weights(int in_k, int out_k, double eps, int d) {
  double sc = std::sqrt(static_cast<double>(d)) / eps;
  std::vector<std::vector<double>> W(out_k, std::vector<double>(in_k, 0.0));
  for (int o = 0; o < out_k; ++o) {
    double a = static_cast<double>(o) / out_k, b = static_cast<double>(o + 1) / out_k;
    for (int c = 0; c < in_k; ++c) {
      double lo = static_cast<double>(c) / in_k, hi = static_cast<double>(c + 1) / in_k;
      W[o][c] = cell_average(
          [&](double x) {
            double s = 0.0;
            for (int img = -1; img <= 1; ++img)
              s += mollifier_cdf(sc * (x - lo - img)) - mollifier_cdf(sc * (x - hi - img));
            return s;
          },
          a, b);
    }
  }
  return W;
}

// Forward-looking time weights with the rescale t -> (T - eps) t / T folded in.
std::vector<std::vector<double>> time_weights(int in_n, int out_n, double T, double eps) {
  std::vector<std::vector<double>> W(out_n, std::vector<double>(in_n, 0.0));
  auto X = [](double r) { return mollifier_cdf(2.0 * r + 1.0); };  // CDF of chi on (-1,0)
  for (int o = 0; o < out_n; ++o) {
    double a = T * o / out_n, b = T * (o + 1) / out_n;
    for (int c = 0; c < in_n; ++c) {
      double lo = T * c / in_n, hi = T * (c + 1) / in_n;
      W[o][c] = cell_average(
          [&](double tau) {
            double tp = tau * (T - eps) / T;
            return X((tp - lo) / eps) - X((tp - hi) / eps);
          },
          a, b);
    }
  }
  return W;
}

void normalize_rows(std::vector<std::vector<double>>& W) {
  for (auto& row : W) {
    for (double& x : row)
      if (x < 1e-14) x = 0.0;
    double s = 0.0;
    for (double x : row) s += x;
    for (double& x : row) x /= s;
  }
}

struct Mixer {
  int d;
  std::vector<Atom> atoms;
  double alpha = 0.0;
  std::vector<AngleAtom> angles;

  void add(const Cell& c, double w) {
    for (const Atom& a : c.osc.atoms()) atoms.push_back({w * a.weight, a.point});
    if (c.conc.active()) {
      alpha += w * c.conc.alpha;
      for (const AngleAtom& a : c.conc.angle_atoms) angles.push_back({w * c.conc.alpha * a.weight, a.point});
    }
  }

  Cell finish() {
    double total = 0.0;
    for (const Atom& a : atoms) total += a.weight;
    for (Atom& a : atoms) a.weight /= total;
    Cell out{DiscreteMeasure(std::move(atoms)).merged(tol().merge), {}};
    if (alpha > 0.0) {
      out.conc.alpha = alpha;
      // merge identical angle points, weights relative to alpha
      std::vector<AngleAtom> merged;
      for (const AngleAtom& a : angles) {
        bool found = false;
        for (AngleAtom& b : merged)
          if ((a.point.base() - b.point.base()).norm() <= tol().merge) {
            b.weight += a.weight;
            found = true;
            break;
          }
        if (!found) merged.push_back(a);
      }
      double s = 0.0;
      for (const AngleAtom& a : merged) s += a.weight;
      for (AngleAtom& a : merged) a.weight /= s;
      out.conc.angle_atoms = std::move(merged);
    }
    return out;
  }
};

}  // namespace

double mollifier_bump(double s) { return raw_bump(s) / bump_mass(); }

double mollifier_cdf(double s) {
  if (s <= -1.0) return 0.0;
  if (s >= 1.0) return 1.0;
  // symmetric bump: use the shorter side
  if (s > 0.0) return 1.0 - mollifier_cdf(-s);
  return gl64().integrate(raw_bump, -1.0, s) / bump_mass();
}

GeneralizedYM mollify(const GeneralizedYM& ym, double eps, int out_k) {
  const double T = ym.horizon();
  if (!(eps > 0.0) || !(eps < T / 2)) throw InfeasibleError("mollify: eps must lie in (0, T/2)");
  if (out_k == 0) out_k = ym.lattice();
  const int d = ym.dim();
  const int in_k = ym.lattice();
  const int in_nt = ym.time_slabs();
  const double out_slabs = T * out_k;
  const int out_nt = static_cast<int>(std::lround(out_slabs));
  if (std::abs(out_slabs - out_nt) > 1e-9) throw InputError("mollify: T*out_k must be an integer");

  auto Wx = space_weights(in_k, out_k, eps, d);
  auto Wt = time_weights(in_nt, out_nt, T, eps);
  normalize_rows(Wx);
  normalize_rows(Wt);

  size_t out_ns = 1;
  for (int i = 0; i < d; ++i) out_ns *= out_k;
  std::vector<Cell> cells;
  cells.reserve(out_ns * out_nt);
  for (int ot = 0; ot < out_nt; ++ot) {
    for (size_t os = 0; os < out_ns; ++os) {
      std::array<int, kMaxDim> ox{};
      size_t r = os;
      for (int a = 0; a < d; ++a) {
        ox[a] = static_cast<int>(r % out_k);
        r /= out_k;
      }
      Mixer mix{d, {}, 0.0, {}};
      for (size_t ic = 0; ic < ym.size(); ++ic) {
        double w = Wt[ot][ym.slab_of(ic)];
        if (w == 0.0) continue;
        auto ix = ym.spatial_coords(ic);
        for (int a = 0; a < d && w != 0.0; ++a) w *= Wx[ox[a]][ix[a]];
        if (w == 0.0) continue;
        mix.add(ym.cell(ic), w);
      }
      cells.push_back(mix.finish());
    }
  }
  return GeneralizedYM(d, T, out_k, std::move(cells));
}

// ---- Step 5

GeneralizedYM lattice_average(const GeneralizedYM& ym, int l) {
  const int k = ym.lattice();
  const int d = ym.dim();
  if (l < 1) throw InputError("lattice_average: l must be positive");
  if (l == k) return ym;
  GeneralizedYM shell = GeneralizedYM::homogeneous(d, ym.horizon(), l, Cell{DiscreteMeasure::dirac(StatePoint(d)), {}});
  std::vector<Cell> cells;
  cells.reserve(shell.size());
  if (l % k == 0) {
    int r = l / k;
    for (size_t i = 0; i < shell.size(); ++i) {
      auto x = shell.spatial_coords(i);
      for (int a = 0; a < d; ++a) x[a] /= r;
      cells.push_back(ym.cell(ym.index(x, shell.slab_of(i) / r)));
    }
  } else if (k % l == 0) {
    int r = k / l;
    double w = 1.0;
    for (int a = 0; a <= d; ++a) w /= r;
    std::vector<Mixer> mixers(shell.size(), Mixer{d, {}, 0.0, {}});
    for (size_t i = 0; i < ym.size(); ++i) {
      auto x = ym.spatial_coords(i);
      for (int a = 0; a < d; ++a) x[a] /= r;
      mixers[shell.index(x, ym.slab_of(i) / r)].add(ym.cell(i), w);
    }
    for (Mixer& m : mixers) cells.push_back(m.finish());
  } else {
    throw InputError("lattice_average: lattices " + std::to_string(k) + " and " + std::to_string(l) +
                     " are not nested");
  }
  return GeneralizedYM(d, ym.horizon(), l, std::move(cells));
}

// ---- diagonal extraction

DiagonalSelection diagonal_select(const std::vector<std::vector<double>>& dist,
                                  const std::function<double(int)>& tolerance) {
  DiagonalSelection sel;
  for (size_t k = 0; k < dist.size(); ++k) {
    double t = tolerance(static_cast<int>(k));
    int chosen = -1;
    double best = INFINITY;
    for (size_t n = 0; n < dist[k].size(); ++n) {
      best = std::min(best, dist[k][n]);
      if (dist[k][n] < t) {
        chosen = static_cast<int>(n);
        best = dist[k][n];
        break;
      }
    }
    if (chosen < 0) sel.complete = false;
    sel.index.push_back(chosen);
    sel.distance.push_back(best);
  }
  return sel;
}

DiagonalSelection diagonal_select(const std::vector<std::vector<GeneralizedYM>>& family,
                                  const std::vector<GeneralizedYM>& limits,
                                  const std::function<double(int)>& tolerance, const TestBank& bank) {
  if (family.size() != limits.size()) throw InputError("diagonal_select: one limit per family row required");
  std::vector<std::vector<double>> dist(family.size());
  for (size_t k = 0; k < family.size(); ++k) {
    auto target = bank_pairings(limits[k], bank);
    for (const GeneralizedYM& s : family[k]) dist[k].push_back(bank_distance(bank_pairings(s, bank), target));
  }
  return diagonal_select(dist, tolerance);
}

// ---- composed pipeline

namespace {

size_t atom_count(const GeneralizedYM& ym) {
  size_t n = 0;
  for (const Cell& c : ym.cells()) n += c.osc.size();
  return n;
}

double max_energy(const GeneralizedYM& ym) {
  auto E = energy_profile(ym);
  return *std::max_element(E.begin(), E.end());
}

}  // namespace

PipelineResult reduce_to_discrete(const GeneralizedYM& ym, const PipelineParams& p) {
  p.validate(ym.horizon());
  const int d = ym.dim();
  const int l = p.l > 0 ? p.l : 2 * ym.lattice();
  const int km = p.mollify_k > 0 ? p.mollify_k : 2 * l;
  if (km % l != 0) throw InputError("pipeline: mollify lattice must refine the averaging lattice");

  TestBank bank(d);
  auto target = bank_pairings(ym, bank);
  PipelineResult res;
  res.target_esssup_energy = max_energy(ym);

  auto report = [&](const std::string& name, const GeneralizedYM& g) {
    res.stages.push_back({name, bank_distance(bank_pairings(g, bank), target), max_energy(g), atom_count(g), g.lattice()});
  };
  report("input", ym);

  GeneralizedYM moll = mollify(ym, p.eps, km);
  report("mollify", moll);
  GeneralizedYM avg = lattice_average(moll, l);
  report("lattice_average", avg);

  auto bary = barycentre(avg);
  std::vector<Cell> truncated, discrete;
  for (size_t i = 0; i < avg.size(); ++i) {
    const Cell& c = avg.cell(i);
    StatePoint conc_offset(d);
    if (c.conc.active()) conc_offset.u = c.conc.alpha * c.conc.u_moment().u;
    DiscreteMeasure osc = c.osc.translated(-bary[i]);
    if (p.quant_h > 0.0) osc = quantize(osc.atoms(), p.quant_h);
    DiscreteMeasure tr = truncate(osc, p.rho, -conc_offset);
    truncated.push_back(Cell{tr.translated(bary[i]), c.conc});
    discrete.push_back(Cell{oscillation_embed(tr, c.conc, p.m), {}});
  }
  GeneralizedYM trunc_ym(d, ym.horizon(), l, std::move(truncated));
  report("truncate", trunc_ym);

  res.discrete = GeneralizedYM(d, ym.horizon(), l, std::move(discrete));
  res.field = bary;
  res.reconstructed = shift(res.discrete, res.field);
  report("oscillation_embed", res.reconstructed);
  return res;
}

}  // namespace ymgen
