#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <sstream>

#include "ymgen/json_io.hpp"
#include "ymgen/rng.hpp"
#include "ymgen/waves.hpp"

namespace ymgen {

LatticeDirection lattice_direction(const Vec& eta, const Grid& g, int max_entry) {
  const int D = g.axes();
  if (eta.dim() != D) throw InputError("lattice_direction: dimension mismatch");
  Vec e = (1.0 / eta.norm()) * eta;
  LatticeDirection best;
  best.angle = 10.0;
  int best_max = 0, best_sum = 0;
  const int span = 2 * max_entry + 1;
  int total = 1;
  for (int a = 0; a < D; ++a) total *= span;
  for (int c = 0; c < total; ++c) {
    std::array<int, kMaxDim + 1> n{};
    int r = c, g0 = 0, mx = 0, sm = 0;
    bool spatial = false;
    for (int a = 0; a < D; ++a) {
      n[a] = r % span - max_entry;
      r /= span;
      g0 = std::gcd(g0, std::abs(n[a]));
      mx = std::max(mx, std::abs(n[a]));
      sm += std::abs(n[a]);
      if (a < D - 1 && n[a] != 0) spatial = true;
    }
    if (g0 != 1 || !spatial) continue;
    Vec m(D);
    for (int a = 0; a < D; ++a) m[a] = n[a] / g.spacing(a);
    Vec mh = (1.0 / m.norm()) * m;
    double cs = mh.dot(e);
    if (cs <= 0.0) continue;
    double ang = (mh - cs * e).norm();
    bool better = ang < best.angle - 1e-14 ||
                  (std::abs(ang - best.angle) <= 1e-14 && (mx < best_max || (mx == best_max && sm < best_sum)));
    if (better) {
      best.n = n;
      best.m = m;
      best.angle = ang;
      best_max = mx;
      best_sum = sm;
    }
  }
  if (best.angle > 9.0) throw InfeasibleError("lattice_direction: no admissible grid direction");
  return best;
}

RationalWave rationalize(const StatePoint& wbar, const Grid& g, int max_entry) {
  const int d = wbar.dim();
  const int D = d + 1;
  if (d != g.d) throw InputError("rationalize: dimension mismatch");
  WaveSpec ws0 = make_wave(wbar);
  RationalWave rw;
  rw.dir = lattice_direction(ws0.eta, g, max_entry);
  Vec eta = (1.0 / rw.dir.m.norm()) * rw.dir.m;

  SymMatrix U0 = lifted_matrix(wbar, ws0.qbar);
  if (U0.apply(eta).norm() <= 1e-12 * std::max(1.0, U0.frobenius())) {
    rw.ws = wave_with_direction(wbar, ws0.qbar, eta);
    return rw;
  }

  // Least-squares change of (v, u) so that U(w', q') eta = 0, q' free.
  const int fc = TracelessSym::free_count(d);
  const int ns = d + fc;
  std::vector<std::vector<double>> A(D, std::vector<double>(ns, 0.0));
  std::vector<double> aq(D, 0.0), s0(ns, 0.0);
  for (int i = 0; i < d; ++i) s0[i] = wbar.v[i];
  for (int k = 0; k < fc; ++k) s0[d + k] = wbar.u.free_at(k);
  for (int i = 0; i < d; ++i) {
    A[i][i] = eta[d];
    aq[i] = eta[i];
    for (int k = 0; k < fc; ++k) {
      TracelessSym E(d);
      E.free_at(k) = 1.0;
      double s = 0.0;
      for (int j = 0; j < d; ++j) s += E(i, j) * eta[j];
      A[i][d + k] = s;
    }
  }
  for (int j = 0; j < d; ++j) A[d][j] = eta[j];

  SymMatrix AAt(D);
  for (int r = 0; r < D; ++r)
    for (int c = 0; c < D; ++c) {
      double s = 0.0;
      for (int k = 0; k < ns; ++k) s += A[r][k] * A[c][k];
      AAt(r, c) = s;
    }
  EigenSystem es = eigen_sym(AAt);
  double cut = 1e-12 * std::max(1.0, std::abs(es.values[D - 1]));
  auto Minv = [&](const std::vector<double>& x) {
    std::vector<double> y(D, 0.0);
    for (int k = 0; k < D; ++k) {
      if (es.values[k] <= cut) continue;
      double c = 0.0;
      for (int r = 0; r < D; ++r) c += es.vectors[k][r] * x[r];
      for (int r = 0; r < D; ++r) y[r] += c / es.values[k] * es.vectors[k][r];
    }
    return y;
  };
  std::vector<double> r0(D, 0.0);
  for (int r = 0; r < D; ++r)
    for (int k = 0; k < ns; ++k) r0[r] += A[r][k] * s0[k];
  std::vector<double> Ma = Minv(aq), Mr = Minv(r0);
  double num = 0.0, den = 0.0;
  for (int r = 0; r < D; ++r) {
    num += aq[r] * Mr[r];
    den += aq[r] * Ma[r];
  }
  double q = den > 1e-14 ? -num / den : ws0.qbar;
  std::vector<double> res(D), y;
  for (int r = 0; r < D; ++r) res[r] = r0[r] + aq[r] * q;
  y = Minv(res);
  StatePoint w(d);
  for (int k = 0; k < ns; ++k) {
    double s = s0[k];
    for (int r = 0; r < D; ++r) s -= A[r][k] * y[r];
    if (k < d)
      w.v[k] = s;
    else
      w.u.free_at(k - d) = s;
  }
  SymMatrix U = lifted_matrix(w, q);
  if (U.apply(eta).norm() > 1e-10 * std::max(1.0, U.frobenius()) || w.v.norm() <= 1e-12 * (1.0 + wbar.norm()))
    throw InfeasibleError("rationalize: cannot align the wave with a grid direction");
  rw.ws = wave_with_direction(w, q, eta);
  rw.perturbation = (w - wbar).norm();
  return rw;
}

void SynthesisParams::validate() const {
  if (k < 0) throw InputError("k must be non-negative");
  if (!(delta > 0.0)) throw InputError("delta must be positive");
  if (!(eps > 0.0 && eps < 1.0)) throw InputError("eps must lie in (0,1)");
  if (max_entry < 1 || max_entry > 8) throw InputError("max_entry must lie in [1,8]");
}

nlohmann::json SynthesisParams::to_json() const {
  return {{"k", k},           {"delta", delta},         {"eps", eps},      {"time_compact", time_compact},
          {"seed", seed},     {"max_entry", max_entry}, {"strict", strict}};
}

nlohmann::json SynthesisReport::to_json() const {
  nlohmann::json j;
  nlohmann::json t = nlohmann::json::array(), e = nlohmann::json::array();
  for (size_t i = 0; i < target.size(); ++i) {
    nlohmann::json a = ymgen::to_json(target[i].point);
    a["w"] = target[i].weight;
    t.push_back(a);
    nlohmann::json b = ymgen::to_json(effective[i].point);
    b["w"] = effective[i].weight;
    e.push_back(b);
  }
  j["target"] = t;
  j["effective"] = e;
  j["predicted_fractions"] = predicted;
  j["perturbation"] = perturbation;
  j["orientation"] = std::vector<int>(orientation.begin(), orientation.begin() + target.at(0).point.dim() + 1);
  nlohmann::json lv = nlohmann::json::array();
  for (const LevelReport& l : levels) {
    std::vector<int> dir(l.direction.begin(), l.direction.end());
    lv.push_back({{"level", l.level},
                  {"regions", l.region_count},
                  {"direction", dir},
                  {"period", l.period},
                  {"perturbation", l.perturbation},
                  {"covered", l.covered}});
  }
  j["levels"] = lv;
  j["sup_norm"] = sup_norm;
  j["uniform_constant"] = uniform_constant;
  return j;
}

namespace {

constexpr int8_t kHost = -2;

double smooth_step(double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  double a = std::exp(-1.0 / x), b = std::exp(-1.0 / (1.0 - x));
  return a / (a + b);
}

// Phase profile with P1 = floor(mub P) points at mua and the rest at -mub,
// one intermediate value restoring zero mean.
std::vector<double> step_sequence(int P, double mua, double mub, int& P1) {
  P1 = static_cast<int>(std::floor(mub * P + 1e-12));
  std::vector<double> h(P);
  for (int s = 0; s < P; ++s) h[s] = s < P1 ? mua : -mub;
  if (P1 < P) {
    double hs = (P - 1) * mub - P1;
    h[P1] = std::abs(hs + mub) < 1e-13 ? -mub : hs;
  }
  return h;
}

std::vector<int> plateau_labels(const std::vector<double>& h, double mua, double mub, int lo_off, int hi_off) {
  const int P = static_cast<int>(h.size());
  std::vector<int> lab(P, -1);
  for (int s = 0; s < P; ++s) {
    bool a = true, b = true;
    for (int r = lo_off; r <= hi_off; ++r) {
      double x = h[((s + r) % P + P) % P];
      a = a && x == -mub;
      b = b && x == mua;
    }
    lab[s] = a ? 0 : b ? 1 : -1;
  }
  return lab;
}

using Orientation = std::array<int, kMaxDim + 1>;

// One step of the recursion: a wave between `la` (weight mua) and `lb`.
// For a host level lb is kHost and `sub` holds the atoms nested inside it.
struct PlanLevel {
  RationalWave rw;
  double mua = 0.0, mub = 0.0;
  int8_t la = -1, lb = -1;
  bool leaf = false;
  std::vector<Atom> sub;  // N = 1: sub holds the single atom
  std::vector<int8_t> sub_ids;
};

std::vector<PlanLevel> make_plan(std::vector<Atom> atoms, const Grid& g, const SynthesisParams& p,
                                 SynthesisReport& rep) {
  Rng rng(p.seed);
  std::vector<PlanLevel> plan;
  std::vector<int8_t> ids(atoms.size());
  std::iota(ids.begin(), ids.end(), 0);
  StatePoint base(g.d);
  while (true) {
    const int N = static_cast<int>(atoms.size());
    if (N == 1) {
      rep.effective[ids[0]] = {rep.target[ids[0]].weight, base + atoms[0].point};
      return plan;
    }
    double vmax = 0.0, scale = 0.0;
    for (const Atom& a : atoms) {
      vmax = std::max(vmax, a.point.v.norm());
      scale = std::max(scale, a.point.norm());
    }
    if (vmax <= 1e-12 * std::max(1.0, scale)) {
      // All velocities coincide: spread them slightly and re-centre.
      StatePoint mean(g.d);
      for (Atom& a : atoms) {
        for (int i = 0; i < g.d; ++i) a.point.v[i] += rng.uniform(-p.eps / 10, p.eps / 10);
        mean += a.weight * a.point;
      }
      for (Atom& a : atoms) a.point -= mean;
      double moved = 0.0;
      for (const Atom& a : atoms) moved = std::max(moved, a.point.v.norm());
      rep.perturbation = std::max(rep.perturbation, moved);
    }

    PlanLevel L;
    if (N == 2) {
      L.rw = rationalize(atoms[1].point - atoms[0].point, g, p.max_entry);
      L.mua = atoms[0].weight;
      L.mub = atoms[1].weight;
      L.la = ids[0];
      L.lb = ids[1];
      L.leaf = true;
      rep.effective[ids[0]] = {rep.target[ids[0]].weight, base - L.mub * L.rw.ws.wbar};
      rep.effective[ids[1]] = {rep.target[ids[1]].weight, base + L.mua * L.rw.ws.wbar};
      rep.perturbation = std::max(rep.perturbation, L.rw.perturbation);
      plan.push_back(L);
      return plan;
    }

    int j = 0;
    for (int i = 1; i < N; ++i)
      if (atoms[i].point.v.norm() > atoms[j].point.v.norm() + 1e-14) j = i;
    const double mj = atoms[j].weight, mr = 1.0 - mj;
    StatePoint rest(g.d);
    for (int i = 0; i < N; ++i)
      if (i != j) rest += (atoms[i].weight / mr) * atoms[i].point;
    L.rw = rationalize(rest - atoms[j].point, g, p.max_entry);
    L.mua = mj;
    L.mub = mr;
    L.la = ids[j];
    L.lb = kHost;
    rep.perturbation = std::max(rep.perturbation, L.rw.perturbation);
    rep.effective[ids[j]] = {rep.target[ids[j]].weight, base - mr * L.rw.ws.wbar};
    base += mj * L.rw.ws.wbar;
    for (int i = 0; i < N; ++i)
      if (i != j) {
        L.sub.push_back({atoms[i].weight / mr, atoms[i].point - rest});
        L.sub_ids.push_back(ids[i]);
      }
    atoms = L.sub;
    ids = L.sub_ids;
    plan.push_back(L);
  }
}

bool compatible(const std::array<int, kMaxDim + 1>& n, const Orientation& o, int D) {
  bool pos = false, neg = false;
  for (int a = 0; a < D; ++a) {
    pos = pos || o[a] * n[a] > 0;
    neg = neg || o[a] * n[a] < 0;
  }
  return !(pos && neg);
}

// Difference orientation under which the finest waves have a one-phase
// stencil window; ties keep forward differences.
Orientation choose_orientation(const std::vector<PlanLevel>& plan, int D) {
  Orientation best{1, 1, 1, 1};
  std::vector<int> best_score;
  for (int mask = 0; mask < (1 << D); ++mask) {
    Orientation o{1, 1, 1, 1};
    for (int a = 0; a < D; ++a)
      if (mask >> a & 1) o[a] = -1;
    std::vector<int> score;
    for (auto it = plan.rbegin(); it != plan.rend(); ++it) score.push_back(compatible(it->rw.dir.n, o, D));
    if (best_score.empty() || score > best_score) {
      best_score = score;
      best = o;
    }
  }
  return best;
}

struct PairGeometry {
  bool ok = false;
  int period = 0;
  std::array<int, kMaxDim + 1> n{};
  std::vector<int> plateau;  // per phase: 0 for la, 1 for lb, -1 otherwise
  std::array<int, kMaxDim + 1> flat_lo{}, flat_len{};
};

template <class F>
void for_box(const Grid& g, const Region& R, F&& fn) {
  const int D = g.axes();
  std::array<int, kMaxDim + 1> loc{};
  const size_t n = R.points(D);
  for (size_t c = 0; c < n; ++c) {
    std::array<int, kMaxDim + 1> i{};
    for (int a = 0; a < D; ++a) i[a] = R.lo[a] + loc[a];
    fn(c, loc, g.index(i));
    for (int a = 0; a < D; ++a) {
      if (++loc[a] < R.len[a]) break;
      loc[a] = 0;
    }
  }
}

class Builder {
 public:
  Builder(GridField& f, std::vector<int8_t>& labels, const SynthesisParams& p, const std::vector<PlanLevel>& plan)
      : f_(f), g_(f.grid()), labels_(labels), p_(p), plan_(plan), o_(f.orientation()) {}

  bool build(const Region& R, int level);
  const std::map<int, LevelReport>& levels() const { return level_info_; }

 private:
  PairGeometry place_pair(const Region& R, int level);
  void relabel(const Region& R, int8_t from, int8_t to);

  GridField& f_;
  const Grid& g_;
  std::vector<int8_t>& labels_;
  const SynthesisParams& p_;
  const std::vector<PlanLevel>& plan_;
  Orientation o_;
  std::map<int, LevelReport> level_info_;
};

void Builder::relabel(const Region& R, int8_t from, int8_t to) {
  for_box(g_, R, [&](size_t, const auto&, size_t p) {
    if (labels_[p] == from) labels_[p] = to;
  });
}

PairGeometry Builder::place_pair(const Region& R, int level) {
  const int D = g_.axes();
  const PlanLevel& PL = plan_[level];
  const double mua = PL.mua, mub = PL.mub;
  PairGeometry geo;
  const RationalWave& rw = PL.rw;
  const auto& n = rw.dir.n;
  const double mlen = rw.dir.m.norm();
  geo.n = n;

  int mmin = 0, mmax = 0, G = 0;
  for (int a = 0; a < D; ++a) {
    mmin = std::min(mmin, o_[a] * n[a]);
    mmax = std::max(mmax, o_[a] * n[a]);
    if (n[a] != 0 && !R.cut[a]) G = std::gcd(G, std::abs(n[a]) * g_.extent(a));
  }
  // A wave along a single axis that is the only cut axis is a function of that
  // coordinate alone: h(x_a) U is exact without cutoffs.
  int axis = -1, nz = 0;
  for (int a = 0; a < D; ++a)
    if (n[a] != 0) {
      ++nz;
      axis = a;
    }
  bool axial = nz == 1 && std::abs(n[axis]) == 1;
  for (int a = 0; a < D; ++a) axial = axial && (!R.cut[a] || a == axis);
  const int lo_off = axial ? 0 : 2 * mmin, hi_off = axial ? 0 : 2 * mmax - 2;

  auto admissible = [&](int P) {
    if (P < 4) return false;
    if (G > 0 && G % P != 0) return false;
    int P1 = 0;
    std::vector<double> h = step_sequence(P, mua, mub, P1);
    std::vector<int> lab = plateau_labels(h, mua, mub, lo_off, hi_off);
    return std::count(lab.begin(), lab.end(), 0) > 0 && std::count(lab.begin(), lab.end(), 1) > 0;
  };
  int extent = 0;
  for (int a = 0; a < D; ++a) extent += std::abs(n[a]) * R.len[a];
  const int Pcap = G > 0 ? G : std::max(4, extent);
  int P = 0;
  if (!PL.leaf) {
    for (int c = Pcap; c >= 4 && P == 0; --c)
      if (admissible(c)) P = c;
  } else if (p_.k > 0) {
    double target = mlen / p_.k;
    double bestd = 1e300;
    for (int c = 4; c <= Pcap; ++c) {
      if (!admissible(c)) continue;
      double dd = std::abs(std::log(c / target));
      if (dd < bestd - 1e-12) {
        bestd = dd;
        P = c;
      }
    }
  } else {
    // Period with the smallest estimated fraction loss: weight quantization
    // plus the share of the region taken by cutoff ramps.
    auto loss = [&](int c) {
      int P1 = 0;
      std::vector<int> lab = plateau_labels(step_sequence(c, mua, mub, P1), mua, mub, lo_off, hi_off);
      double f0 = static_cast<double>(std::count(lab.begin(), lab.end(), 0)) / c;
      double f1 = static_cast<double>(std::count(lab.begin(), lab.end(), 1)) / c;
      double e = std::max(std::abs(f0 - mua), std::abs(f1 - mub));
      for (int a = 0; a < D && !axial; ++a)
        if (R.cut[a]) e += (2.0 * p_.delta * (c / mlen) / g_.spacing(a) + 4.0) / R.len[a];
      return e;
    };
    double best = 1e300;
    for (int c = 4; c <= std::min(Pcap, 256); ++c) {
      if (!admissible(c)) continue;
      double e = loss(c);
      if (e < best - 1e-12) {
        best = e;
        P = c;
      }
    }
  }
  if (P == 0) return geo;
  geo.period = P;

  if (axial) {
    int P1 = 0;
    std::vector<double> h = step_sequence(P, mua, mub, P1);
    geo.plateau = plateau_labels(h, mua, mub, 0, 0);
    for (int a = 0; a < D; ++a) {
      geo.flat_lo[a] = R.lo[a];
      geo.flat_len[a] = R.len[a];
    }
    for_box(g_, R, [&](size_t, const auto& loc, size_t p) {
      int s = ((n[axis] * loc[axis]) % P + P) % P;
      f_.add_lifted(p, h[s] * rw.ws.U);
      labels_[p] = geo.plateau[s] == 0 ? PL.la : geo.plateau[s] == 1 ? PL.lb : int8_t(-1);
    });
    LevelReport& lr = level_info_[level];
    lr.level = level;
    lr.region_count += 1;
    lr.direction = n;
    lr.period = P;
    lr.perturbation = rw.perturbation;
    geo.ok = true;
    return geo;
  }

  // Cutoff ramps along cut axes, two zero layers at each end.
  const double lambda = P / mlen;
  std::array<std::vector<double>, kMaxDim + 1> chi;
  for (int a = 0; a < D; ++a) {
    chi[a].assign(R.len[a], 1.0);
    geo.flat_lo[a] = R.lo[a];
    geo.flat_len[a] = R.len[a];
    if (!R.cut[a]) continue;
    const double ramp = p_.delta * lambda / g_.spacing(a);
    const int L = R.len[a];
    if (L < 2.0 * ramp + 8.0) return geo;
    for (int j = 0; j < L; ++j) {
      double up = smooth_step((j - 1.0) / (ramp + 1.0));
      double down = smooth_step((L - 2.0 - j) / (ramp + 1.0));
      chi[a][j] = std::min(up, down);
    }
    int first = -1, last = -1;
    for (int j = 2; j + 2 < L; ++j) {
      bool one = true;
      for (int r = -2; r <= 2; ++r) one = one && chi[a][j + r] == 1.0;
      if (one) {
        if (first < 0) first = j;
        last = j;
      }
    }
    if (first < 0) return geo;
    geo.flat_lo[a] = R.lo[a] + first;
    geo.flat_len[a] = last - first + 1;
  }

  int P1 = 0;
  std::vector<double> h = step_sequence(P, mua, mub, P1);
  geo.plateau = plateau_labels(h, mua, mub, lo_off, hi_off);

  // Periodic second antiderivative of h / |m|^2 in the phase variable.
  std::vector<double> F(P, 0.0), Gam(P, 0.0);
  for (int s = 1; s < P; ++s) F[s] = F[s - 1] + h[s - 1] / (mlen * mlen);
  double fm = std::accumulate(F.begin(), F.end(), 0.0) / P;
  for (double& x : F) x -= fm;
  for (int s = 1; s < P; ++s) Gam[s] = Gam[s - 1] + F[s - 1];
  double gm = std::accumulate(Gam.begin(), Gam.end(), 0.0) / P;
  for (double& x : Gam) x -= gm;

  auto phase = [&](const std::array<int, kMaxDim + 1>& loc) {
    long s = 0;
    for (int a = 0; a < D; ++a) s += static_cast<long>(n[a]) * loc[a];
    return static_cast<int>(((s % P) + P) % P);
  };

  const size_t npts = R.points(D);
  std::vector<double> phi(npts);
  std::array<long, kMaxDim + 1> stride{};
  long st = 1;
  for (int a = 0; a < D; ++a) {
    stride[a] = st;
    st *= R.len[a];
  }
  for_box(g_, R, [&](size_t c, const auto& loc, size_t) {
    double x = Gam[phase(loc)];
    for (int a = 0; a < D; ++a) x *= chi[a][loc[a]];
    phi[c] = x;
  });

  // Value of phi one oriented step along `a`; zero outside cut axes.
  auto step = [&](long c, std::array<int, kMaxDim + 1>& loc, int a, bool& inside) -> long {
    if (!inside) return c;
    int x = loc[a] + o_[a];
    if (x >= 0 && x < R.len[a]) {
      loc[a] = x;
      return c + o_[a] * stride[a];
    }
    if (R.cut[a]) {
      inside = false;
      return c;
    }
    x = (x + R.len[a]) % R.len[a];
    long r = c + (x - loc[a]) * stride[a];
    loc[a] = x;
    return r;
  };
  auto at = [&](long c, bool inside) { return inside ? phi[c] : 0.0; };

  const PotentialSymbol K(rw.ws);
  for_box(g_, R, [&](size_t c0, const auto& loc0, size_t p) {
    const long c = static_cast<long>(c0);
    SymMatrix H(D);
    for (int k = 0; k < D; ++k) {
      auto lk = loc0;
      bool ik = true;
      long ck = step(c, lk, k, ik);
      for (int l = k; l < D; ++l) {
        auto ll = loc0, lkl = lk;
        bool il = true, ikl = ik;
        long cl = step(c, ll, l, il);
        long ckl = step(ck, lkl, l, ikl);
        double v = at(ckl, ikl) - at(ck, ik) - at(cl, il) + phi[c];
        H(k, l) = H(l, k) = o_[k] * o_[l] * v / (g_.spacing(k) * g_.spacing(l));
      }
    }
    f_.add_lifted(p, K.apply(H));

    bool flat = true;
    for (int a = 0; a < D; ++a) {
      int gi = R.lo[a] + loc0[a];
      flat = flat && gi >= geo.flat_lo[a] && gi < geo.flat_lo[a] + geo.flat_len[a];
    }
    int lab = flat ? geo.plateau[phase(loc0)] : -1;
    labels_[p] = lab == 0 ? PL.la : lab == 1 ? PL.lb : int8_t(-1);
  });

  LevelReport& lr = level_info_[level];
  lr.level = level;
  lr.region_count += 1;
  lr.direction = n;
  lr.period = P;
  lr.perturbation = rw.perturbation;
  geo.ok = true;
  return geo;
}

bool Builder::build(const Region& R, int level) {
  const int D = g_.axes();
  PairGeometry geo = place_pair(R, level);
  if (!geo.ok) return false;
  const PlanLevel& PL = plan_[level];
  if (PL.leaf) return true;

  std::vector<Region> regions;
  int axis = -1, nz = 0;
  for (int a = 0; a < D; ++a)
    if (geo.n[a] != 0) {
      ++nz;
      axis = std::abs(geo.n[a]) == 1 ? a : -1;
    }
  if (nz == 1 && axis >= 0) {
    // Host plateaus are slabs across `axis`.
    const int P = geo.period;
    const int lo = geo.flat_lo[axis] - R.lo[axis];
    const int hi = lo + geo.flat_len[axis];
    int start = -1;
    for (int x = lo; x <= hi; ++x) {
      bool host = false;
      if (x < hi) {
        int s = ((geo.n[axis] * x) % P + P) % P;
        host = geo.plateau[s] == 1;
      }
      if (host && start < 0) start = x;
      if (!host && start >= 0) {
        Region S = R;
        for (int a = 0; a < D; ++a)
          if (R.cut[a]) {
            S.lo[a] = geo.flat_lo[a];
            S.len[a] = geo.flat_len[a];
          }
        S.lo[axis] = R.lo[axis] + start;
        S.len[axis] = x - start;
        S.cut[axis] = true;
        regions.push_back(S);
        start = -1;
      }
    }
  } else {
    const int N = static_cast<int>(PL.sub.size()) + 1;
    CubeSet cs = cube_exhaustion(
        g_, R, [&](size_t p) { return labels_[p] == kHost; }, p_.eps / N, 8);
    for (const Cube& c : cs.cubes) {
      Region S;
      for (int a = 0; a < D; ++a) {
        S.lo[a] = c.corner[a];
        S.len[a] = c.side;
        S.cut[a] = true;
      }
      regions.push_back(S);
    }
  }

  size_t host_pts = 0, filled = 0;
  for_box(g_, R, [&](size_t, const auto&, size_t p) { host_pts += labels_[p] == kHost; });
  for (const Region& S : regions) {
    if (build(S, level + 1))
      filled += S.points(D);
    else
      relabel(S, kHost, -1);
  }
  relabel(R, kHost, -1);
  LevelReport& lr = level_info_[level];
  lr.covered = host_pts ? static_cast<double>(filled) / host_pts : 0.0;
  return true;
}

Synthesis synthesize(const std::vector<Atom>& atoms, const Grid& g, const SynthesisParams& p) {
  p.validate();
  g.validate();
  if (atoms.size() > 100) throw InputError("n_atom_field: at most 100 atoms");
  Synthesis out;
  out.field = GridField(g, Stencil::Forward);
  out.labels.assign(g.points(), -1);
  out.report.target = atoms;
  out.report.effective = atoms;

  std::vector<PlanLevel> plan = make_plan(atoms, g, p, out.report);
  const Orientation o = choose_orientation(plan, g.axes());
  out.field.set_orientation(o);
  out.report.orientation = o;

  Region R = Region::full(g, p.time_compact);
  if (plan.empty()) {
    out.labels.assign(g.points(), 0);
  } else {
    Builder b(out.field, out.labels, p, plan);
    if (!b.build(R, 0)) throw InfeasibleError("grid too coarse for the requested frequency and ramp width");
    for (const auto& [lv, r] : b.levels()) out.report.levels.push_back(r);
  }

  std::vector<size_t> count(atoms.size(), 0);
  for (int8_t l : out.labels)
    if (l >= 0) ++count[l];
  double e = 0.0;
  for (size_t i = 0; i < atoms.size(); ++i) {
    out.report.predicted.push_back(static_cast<double>(count[i]) / g.points());
    e += atoms[i].weight * gen_energy(atoms[i].point);
  }
  double sup = 0.0;
  for (size_t q = 0; q < g.points(); ++q) sup = std::max(sup, out.field.state(q).norm());
  out.report.sup_norm = sup;
  out.report.uniform_constant = e > 0.0 ? sup / e : 0.0;

  if (p.strict) {
    for (size_t i = 0; i < atoms.size(); ++i)
      if (std::abs(out.report.predicted[i] - atoms[i].weight) >= p.eps) {
        std::ostringstream os;
        os << "volume fraction of atom " << i << " is " << out.report.predicted[i] << ", target " << atoms[i].weight
           << ": eps " << p.eps << " not reachable with this grid, k and delta";
        throw InfeasibleError(os.str());
      }
  }
  return out;
}

}  // namespace

Synthesis two_atom_field(const StatePoint& w1, const StatePoint& w2, double mu1, double mu2, const Grid& g,
                         const SynthesisParams& p) {
  if (!(mu1 > 0 && mu2 > 0) || std::abs(mu1 + mu2 - 1.0) > tol().probability)
    throw InputError("two_atom_field: weights must be positive and sum to one");
  StatePoint b = mu1 * w1 + mu2 * w2;
  if (b.norm() > tol().barycentre * (1.0 + w1.norm() + w2.norm()))
    throw InputError("two_atom_field: atoms must have zero barycentre");
  if ((w1.v - w2.v).norm() == 0.0) throw InfeasibleError("two_atom_field: equal velocities admit no wave direction");
  return synthesize({{mu1, w1}, {mu2, w2}}, g, p);
}

Synthesis n_atom_field(const DiscreteMeasure& nu, const Grid& g, const SynthesisParams& p) {
  if (nu.dim() != g.d) throw InputError("n_atom_field: dimension mismatch");
  double scale = 1.0;
  for (const Atom& a : nu.atoms()) scale = std::max(scale, a.point.norm());
  if (nu.barycentre().norm() > 1e-10 * scale) throw InputError("n_atom_field: measure must have zero barycentre");
  return synthesize(nu.atoms(), g, p);
}

}  // namespace ymgen
