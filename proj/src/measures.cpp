#include "ymgen/measures.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "ymgen/rng.hpp"

namespace ymgen {

// ---- DiscreteMeasure

DiscreteMeasure::DiscreteMeasure(std::vector<Atom> atoms) : atoms_(std::move(atoms)) {
  if (atoms_.empty()) throw InputError("discrete measure needs at least one atom");
  int d = atoms_.front().point.dim();
  check_dim(d);
  double total = 0.0;
  for (const Atom& a : atoms_) {
    if (!(a.weight > 0.0)) throw InputError("atom weights must be positive");
    if (a.point.dim() != d) throw InputError("atoms of mixed dimension");
    total += a.weight;
  }
  if (std::abs(total - 1.0) > tol().probability * std::max<double>(1.0, atoms_.size()))
    throw InputError("atom weights must sum to 1 (got " + std::to_string(total) + ")");
}

DiscreteMeasure DiscreteMeasure::dirac(const StatePoint& w) { return DiscreteMeasure({Atom{1.0, w}}); }

StatePoint DiscreteMeasure::barycentre() const {
  StatePoint b(dim());
  for (const Atom& a : atoms_) b += a.weight * a.point;
  return b;
}

double DiscreteMeasure::expect(const std::function<double(const StatePoint&)>& f) const {
  double s = 0.0;
  for (const Atom& a : atoms_) s += a.weight * f(a.point);
  return s;
}

DiscreteMeasure DiscreteMeasure::translated(const StatePoint& w) const {
  std::vector<Atom> out = atoms_;
  for (Atom& a : out) a.point += w;
  return DiscreteMeasure(std::move(out));
}

DiscreteMeasure DiscreteMeasure::merged(double radius) const {
  std::vector<Atom> out;
  for (const Atom& a : atoms_) {
    bool done = false;
    for (Atom& b : out) {
      if ((a.point - b.point).norm() <= radius) {
        double w = a.weight + b.weight;
        b.point = (b.weight / w) * b.point + (a.weight / w) * a.point;
        b.weight = w;
        done = true;
        break;
      }
    }
    if (!done) out.push_back(a);
  }
  return DiscreteMeasure(std::move(out));
}

// ---- ConcentrationPart

void ConcentrationPart::validate(int d) const {
  if (alpha < 0.0) throw InputError("concentration density must be nonnegative");
  if (alpha == 0.0) return;
  if (angle_atoms.empty()) throw InputError("concentration density without angle atoms");
  double total = 0.0;
  for (const AngleAtom& a : angle_atoms) {
    if (!(a.weight > 0.0)) throw InputError("angle weights must be positive");
    if (a.point.base().dim() != d) throw InputError("angle atom dimension mismatch");
    total += a.weight;
  }
  if (std::abs(total - 1.0) > tol().probability * std::max<double>(1.0, angle_atoms.size()))
    throw InputError("angle weights must sum to 1");
}

StatePoint ConcentrationPart::u_moment() const {
  StatePoint m;
  bool first = true;
  for (const AngleAtom& a : angle_atoms) {
    if (first) {
      m = StatePoint(a.point.base().dim());
      first = false;
    }
    m += a.weight * a.point.base();
  }
  return m;
}

// ---- Box and lattice

double Box::volume() const {
  double v = 1.0;
  for (int i = 0; i < dims; ++i) v *= hi[i] - lo[i];
  return v;
}

GeneralizedYM::GeneralizedYM(int d, double T, int k, std::vector<Cell> cells)
    : d_(d), T_(T), k_(k), cells_(std::move(cells)) {
  check_dim(d);
  if (!(T > 0.0)) throw InputError("time horizon must be positive");
  if (k < 1) throw InputError("lattice refinement must be >= 1");
  double slabs = T * k;
  nt_ = static_cast<int>(std::lround(slabs));
  if (nt_ < 1 || std::abs(slabs - nt_) > 1e-9) throw InputError("T*k must be an integer");
  ns_ = 1;
  for (int i = 0; i < d; ++i) ns_ *= k;
  if (cells_.size() != static_cast<size_t>(ns_) * nt_)
    throw InputError("expected " + std::to_string(static_cast<size_t>(ns_) * nt_) + " cells, got " +
                     std::to_string(cells_.size()));
  for (const Cell& c : cells_) {
    if (c.osc.size() == 0) throw InputError("cell without oscillation measure");
    if (c.osc.dim() != d) throw InputError("cell measure dimension mismatch");
    c.conc.validate(d);
  }
}

GeneralizedYM GeneralizedYM::homogeneous(int d, double T, int k, const Cell& cell) {
  check_dim(d);
  int nt = static_cast<int>(std::lround(T * k));
  size_t n = static_cast<size_t>(std::pow(k, d)) * std::max(nt, 1);
  return GeneralizedYM(d, T, k, std::vector<Cell>(n, cell));
}

size_t GeneralizedYM::index(const std::array<int, kMaxDim>& x, int slab) const {
  size_t s = 0, stride = 1;
  for (int i = 0; i < d_; ++i) {
    s += static_cast<size_t>(x[i]) * stride;
    stride *= k_;
  }
  return static_cast<size_t>(slab) * ns_ + s;
}

std::array<int, kMaxDim> GeneralizedYM::spatial_coords(size_t i) const {
  std::array<int, kMaxDim> x{};
  size_t s = i % ns_;
  for (int a = 0; a < d_; ++a) {
    x[a] = static_cast<int>(s % k_);
    s /= k_;
  }
  return x;
}

Box GeneralizedYM::cell_box(size_t i) const {
  Box b;
  b.dims = d_ + 1;
  auto x = spatial_coords(i);
  double h = 1.0 / k_;
  for (int a = 0; a < d_; ++a) {
    b.lo[a] = x[a] * h;
    b.hi[a] = (x[a] + 1) * h;
  }
  int s = slab_of(i);
  b.lo[d_] = s * h;
  b.hi[d_] = (s + 1) * h;
  return b;
}

double GeneralizedYM::spatial_cell_volume() const { return std::pow(1.0 / k_, d_); }
double GeneralizedYM::cell_volume() const { return spatial_cell_volume() / k_; }

bool GeneralizedYM::same_domain(const GeneralizedYM& o) const {
  return d_ == o.d_ && std::abs(T_ - o.T_) < 1e-12;
}

bool GeneralizedYM::has_concentration() const {
  return std::any_of(cells_.begin(), cells_.end(), [](const Cell& c) { return c.conc.active(); });
}

// ---- test functions

TestFunction::TestFunction(std::string name, Eval f, std::optional<Eval> recession, bool convex)
    : name_(std::move(name)), f_(std::move(f)), rec_(std::move(recession)), convex_(convex) {}

double TestFunction::recession(const SpherePoint& z) const {
  if (!rec_) throw InputError("test function '" + name_ + "' has no recession function");
  return (*rec_)(z.base());
}

double recession_eval(const TestFunction& f, const StatePoint& w) {
  if (!f.has_recession()) throw InputError("test function '" + f.name() + "' has no recession function");
  if (w.is_zero()) return 0.0;
  auto [s, z] = sphere_split(w);
  return s * s * f.recession(z);
}

TestFunction tf_constant(double c) {
  return TestFunction(
      "const", [c](const StatePoint&) { return c; }, [](const StatePoint&) { return 0.0; }, true);
}

TestFunction tf_velocity(int i) {
  return TestFunction(
      "v" + std::to_string(i), [i](const StatePoint& w) { return w.v[i]; },
      [](const StatePoint&) { return 0.0; }, true);
}

TestFunction tf_stress(int k) {
  auto f = [k](const StatePoint& w) { return w.u.free_at(k); };
  return TestFunction("u" + std::to_string(k), f, f, true);
}

TestFunction tf_kinetic() {
  auto f = [](const StatePoint& w) { return w.v.norm2(); };
  return TestFunction("kinetic", f, f, true);
}

TestFunction tf_energy() { return TestFunction("energy", gen_energy, TestFunction::Eval(gen_energy), true); }

TestFunction tf_defect() {
  auto f = [](const StatePoint& w) { return (w.u - ocircle(w.v)).frobenius(); };
  return TestFunction("defect", f, f, false);
}

TestFunction tf_linear(const Vec& a, const TracelessSym& b) {
  return TestFunction(
      "linear", [a, b](const StatePoint& w) { return a.dot(w.v) + b.contract(w.u); },
      [b](const StatePoint& w) { return b.contract(w.u); }, true);
}

TestFunction tf_max_affine(std::vector<Vec> a, std::vector<TracelessSym> b, std::vector<double> c) {
  auto f = [a, b, c](const StatePoint& w) {
    double m = -INFINITY;
    for (size_t j = 0; j < a.size(); ++j) m = std::max(m, a[j].dot(w.v) + b[j].contract(w.u) + c[j]);
    return m;
  };
  auto r = [b](const StatePoint& w) {
    double m = -INFINITY;
    for (const TracelessSym& bj : b) m = std::max(m, bj.contract(w.u));
    return m;
  };
  return TestFunction("max_affine", f, r, true);
}

// ---- bumps

namespace {

double bump1(double s, double c, double r) {
  double x = s - c;
  if (std::abs(x) >= r) return 0.0;
  return 0.5 * (1.0 + std::cos(std::numbers::pi * x / r));
}

// integral of bump1 over [a, b]
double bump1_integral(double a, double b, double c, double r) {
  double lo = std::max(a, c - r), hi = std::min(b, c + r);
  if (hi <= lo) return 0.0;
  auto F = [&](double s) { return 0.5 * (s + r / std::numbers::pi * std::sin(std::numbers::pi * (s - c) / r)); };
  return F(hi) - F(lo);
}

}  // namespace

double SpatialBump::value(const std::array<double, kMaxDim + 1>& s, int dims) const {
  if (constant) return 1.0;
  double v = 1.0;
  for (int i = 0; i < dims; ++i) v *= bump1(s[i], centre[i], radius);
  return v;
}

double SpatialBump::integral(const Box& b, int dims) const {
  if (constant) return b.volume();
  double v = 1.0;
  for (int i = 0; i < dims; ++i) v *= bump1_integral(b.lo[i], b.hi[i], centre[i], radius);
  return v;
}

// ---- bank

TestBank::TestBank(int d, unsigned seed) : d_(d) {
  check_dim(d);
  const int D = d + 1;

  SpatialBump one;
  one.constant = true;
  bumps_.push_back(one);
  SpatialBump mid;
  mid.radius = 0.5;
  for (int i = 0; i < D; ++i) mid.centre[i] = 0.5;
  bumps_.push_back(mid);
  for (int mask = 0; mask < (1 << D); ++mask) {
    SpatialBump b;
    b.radius = 0.25;
    for (int i = 0; i < D; ++i) b.centre[i] = (mask >> i & 1) ? 0.75 : 0.25;
    bumps_.push_back(b);
  }

  for (int i = 0; i < d; ++i) functions_.push_back(tf_velocity(i));
  for (int k = 0; k < TracelessSym::free_count(d); ++k) functions_.push_back(tf_stress(k));
  functions_.push_back(tf_kinetic());
  functions_.push_back(tf_energy());
  functions_.push_back(tf_defect());

  Rng rng(seed);
  auto rand_vec = [&] {
    Vec a(d);
    for (int i = 0; i < d; ++i) a[i] = rng.uniform(-1.0, 1.0);
    return a;
  };
  auto rand_sym = [&] {
    TracelessSym b(d);
    for (int k = 0; k < b.free_count(); ++k) b.free_at(k) = rng.uniform(-1.0, 1.0);
    return b;
  };
  for (int j = 0; j < 4; ++j) functions_.push_back(tf_linear(rand_vec(), rand_sym()));
  for (int j = 0; j < 2; ++j) {
    std::vector<Vec> a;
    std::vector<TracelessSym> b;
    std::vector<double> c;
    for (int p = 0; p < 3; ++p) {
      a.push_back(rand_vec());
      b.push_back(rand_sym());
      c.push_back(rng.uniform(-0.5, 0.5));
    }
    functions_.push_back(tf_max_affine(a, b, c));
  }

  // Cantor diagonal over (bump, function)
  const int nb = static_cast<int>(bumps_.size()), nf = static_cast<int>(functions_.size());
  for (int diag = 0; diag <= nb + nf - 2; ++diag) {
    for (int i = 0; i <= diag; ++i) {
      int j = diag - i;
      if (i >= nb || j >= nf) continue;
      entries_.push_back({bumps_[i], functions_[j], "bump" + std::to_string(i) + ":" + functions_[j].name() + "#" + std::to_string(j)});
    }
  }
}

// ---- pairing

namespace {

double cell_value(const Cell& c, const TestFunction& f) {
  double s = c.osc.expect([&](const StatePoint& w) { return f(w); });
  if (c.conc.active()) {
    if (!f.has_recession())
      throw InputError("test function '" + f.name() + "' needs a recession function on concentrating cells");
    double r = 0.0;
    for (const AngleAtom& a : c.conc.angle_atoms) r += a.weight * f.recession(a.point);
    s += c.conc.alpha * r;
  }
  return s;
}

Box normalized(Box b, double T, int d) {
  b.lo[d] /= T;
  b.hi[d] /= T;
  return b;
}

}  // namespace

double pair(const GeneralizedYM& ym, const TestFunction& f) {
  double s = 0.0;
  double vol = ym.cell_volume();
  for (const Cell& c : ym.cells()) s += vol * cell_value(c, f);
  return s;
}

double pair_weighted(const GeneralizedYM& ym, const SpatialBump& phi, const TestFunction& f) {
  double s = 0.0;
  const int d = ym.dim();
  for (size_t i = 0; i < ym.size(); ++i) {
    Box b = normalized(ym.cell_box(i), ym.horizon(), d);
    double w = ym.horizon() * phi.integral(b, d + 1);
    if (w == 0.0) continue;
    s += w * cell_value(ym.cell(i), f);
  }
  return s;
}

std::vector<double> bank_pairings(const GeneralizedYM& ym, const TestBank& bank) {
  if (ym.dim() != bank.dim()) throw InputError("bank dimension mismatch");
  const int d = ym.dim();
  const auto& bumps = bank.bumps();
  const auto& fns = bank.functions();
  // cell values and bump integrals once, then combine per entry
  std::vector<std::vector<double>> cv(fns.size(), std::vector<double>(ym.size()));
  for (size_t j = 0; j < fns.size(); ++j)
    for (size_t i = 0; i < ym.size(); ++i) cv[j][i] = cell_value(ym.cell(i), fns[j]);
  std::vector<std::vector<double>> bw(bumps.size(), std::vector<double>(ym.size()));
  for (size_t b = 0; b < bumps.size(); ++b)
    for (size_t i = 0; i < ym.size(); ++i)
      bw[b][i] = ym.horizon() * bumps[b].integral(normalized(ym.cell_box(i), ym.horizon(), d), d + 1);

  std::vector<double> out;
  out.reserve(bank.size());
  const int nf = static_cast<int>(fns.size());
  for (int diag = 0; diag <= static_cast<int>(bumps.size()) + nf - 2; ++diag) {
    for (int b = 0; b <= diag; ++b) {
      int j = diag - b;
      if (b >= static_cast<int>(bumps.size()) || j >= nf) continue;
      double s = 0.0;
      for (size_t i = 0; i < ym.size(); ++i) s += bw[b][i] * cv[j][i];
      out.push_back(s);
    }
  }
  return out;
}

double bank_distance(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) throw InputError("bank pairing vectors differ in length");
  double s = 0.0, w = 0.5;
  for (size_t k = 0; k < a.size(); ++k, w *= 0.5) {
    double x = std::abs(a[k] - b[k]);
    s += w * x / (1.0 + x);
  }
  return s;
}

double ym_distance(const GeneralizedYM& a, const GeneralizedYM& b, const TestBank& bank) {
  if (!a.same_domain(b)) throw InputError("ym_distance: measures live on different domains");
  return bank_distance(bank_pairings(a, bank), bank_pairings(b, bank));
}

double ym_distance(const GeneralizedYM& a, const GeneralizedYM& b) {
  TestBank bank(a.dim());
  return ym_distance(a, b, bank);
}

std::vector<StatePoint> barycentre(const GeneralizedYM& ym) {
  std::vector<StatePoint> out;
  out.reserve(ym.size());
  for (const Cell& c : ym.cells()) {
    StatePoint b = c.osc.barycentre();
    if (c.conc.active()) b.u += c.conc.alpha * c.conc.u_moment().u;
    out.push_back(b);
  }
  return out;
}

GeneralizedYM shift(const GeneralizedYM& ym, const std::vector<StatePoint>& w_field) {
  if (w_field.size() != ym.size()) throw InputError("shift field is not aligned with the lattice");
  std::vector<Cell> cells = ym.cells();
  for (size_t i = 0; i < cells.size(); ++i) cells[i].osc = cells[i].osc.translated(w_field[i]);
  return GeneralizedYM(ym.dim(), ym.horizon(), ym.lattice(), std::move(cells));
}

std::vector<double> energy_profile(const GeneralizedYM& ym) {
  std::vector<double> E(ym.time_slabs(), 0.0);
  TestFunction e = tf_energy();
  double vol = ym.spatial_cell_volume();
  for (size_t i = 0; i < ym.size(); ++i) E[ym.slab_of(i)] += vol * cell_value(ym.cell(i), e);
  return E;
}

// ---- velocity space

namespace {

void check_velocity_measure(const VelocityMeasure& vm) {
  check_dim(vm.d);
  size_t ns = 1;
  for (int i = 0; i < vm.d; ++i) ns *= vm.k;
  size_t nt = static_cast<size_t>(std::lround(vm.T * vm.k));
  if (vm.cells.size() != ns * nt) throw InputError("velocity measure has the wrong number of cells");
}

}  // namespace

GeneralizedYM lift_measure(const VelocityMeasure& vm) {
  check_velocity_measure(vm);
  std::vector<Cell> cells;
  cells.reserve(vm.cells.size());
  for (const VelocityCell& vc : vm.cells) {
    std::vector<Atom> atoms;
    for (const auto& [w, xi] : vc.atoms) atoms.push_back({w, lift_point(xi)});
    Cell c{DiscreteMeasure(std::move(atoms)), {}};
    c.conc.alpha = vc.alpha;
    for (const auto& [w, xi] : vc.angles) {
      if (std::abs(xi.norm() - 1.0) > tol().sphere) throw InputError("velocity angle atom is not a unit vector");
      c.conc.angle_atoms.push_back({w, SpherePoint(lift_point(xi))});
    }
    cells.push_back(std::move(c));
  }
  return GeneralizedYM(vm.d, vm.T, vm.k, std::move(cells));
}

VelocityFunction compose_lift(const TestFunction& f) {
  VelocityFunction g;
  g.f = [f](const Vec& xi) { return f(lift_point(xi)); };
  if (f.has_recession()) g.recession = [f](const Vec& xi) { return f.recession_raw(lift_point(xi)); };
  return g;
}

double pair_velocity(const VelocityMeasure& vm, const VelocityFunction& g) {
  check_velocity_measure(vm);
  double vol = std::pow(1.0 / vm.k, vm.d) / vm.k;
  double s = 0.0;
  for (const VelocityCell& c : vm.cells) {
    double cs = 0.0;
    for (const auto& [w, xi] : c.atoms) cs += w * g.f(xi);
    if (c.alpha > 0.0) {
      if (!g.recession) throw InputError("velocity test function has no recession function");
      double r = 0.0;
      for (const auto& [w, xi] : c.angles) r += w * g.recession(xi);
      cs += c.alpha * r;
    }
    s += vol * cs;
  }
  return s;
}

std::vector<double> velocity_energy_profile(const VelocityMeasure& vm) {
  check_velocity_measure(vm);
  size_t ns = 1;
  for (int i = 0; i < vm.d; ++i) ns *= vm.k;
  std::vector<double> E(vm.cells.size() / ns, 0.0);
  double vol = std::pow(1.0 / vm.k, vm.d);
  for (size_t i = 0; i < vm.cells.size(); ++i) {
    const VelocityCell& c = vm.cells[i];
    double e = 0.5 * c.alpha;
    for (const auto& [w, xi] : c.atoms) e += 0.5 * w * xi.norm2();
    E[i / ns] += vol * e;
  }
  return E;
}

}  // namespace ymgen
