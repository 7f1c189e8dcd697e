#include "ymgen/verification.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <iomanip>
#include <numbers>
#include <sstream>

#include <fftw3.h>

namespace ymgen {

namespace {

using cplx = std::complex<double>;

struct FftChannels {
  std::vector<fftw_complex*> data;
  size_t nc = 0;
  ~FftChannels() {
    for (fftw_complex* p : data) fftw_free(p);
  }
};

}  // namespace

Residual subsolution_residual(const GridField& f) {
  const Grid& g = f.grid();
  const int d = g.d, D = g.axes();
  const int fc = TracelessSym::free_count(d);
  const size_t N = g.points();
  const int h0 = g.extent(0) / 2 + 1;

  int rank = D;
  std::array<int, kMaxDim + 1> dims{};
  for (int a = 0; a < D; ++a) dims[a] = g.extent(D - 1 - a);

  FftChannels ch;
  ch.nc = N / g.extent(0) * h0;
  double* real = fftw_alloc_real(N);
  ch.data.push_back(fftw_alloc_complex(ch.nc));
  fftw_plan plan = fftw_plan_dft_r2c(rank, dims.data(), real, ch.data[0], FFTW_ESTIMATE);
  for (int c = 0; c < d + fc; ++c) {
    if (c > 0) ch.data.push_back(fftw_alloc_complex(ch.nc));
    for (size_t p = 0; p < N; ++p) real[p] = f.raw(p)[c];
    fftw_execute_dft_r2c(plan, real, ch.data[c]);
  }
  fftw_destroy_plan(plan);
  fftw_free(real);

  // Per-axis derivative symbols.
  std::array<std::vector<cplx>, kMaxDim + 1> sym;
  double smax2 = 0.0;
  for (int a = 0; a < D; ++a) {
    const int n = g.extent(a);
    const double h = g.spacing(a);
    sym[a].resize(n);
    double m = 0.0;
    for (int x = 0; x < n; ++x) {
      int k = x <= n / 2 ? x : x - n;
      if (f.stencil() == Stencil::Forward) {
        const int o = f.orientation()[a];
        sym[a][x] = static_cast<double>(o) * (std::polar(1.0, o * 2.0 * std::numbers::pi * x / n) - 1.0) / h;
      } else {
        sym[a][x] = 2 * x == n ? 0.0 : cplx(0.0, 2.0 * std::numbers::pi * k / g.length(a));
      }
      m = std::max(m, std::abs(sym[a][x]));
    }
    smax2 += m * m;
  }
  const double smax = std::sqrt(smax2);

  Residual r;
  double norm2 = 0.0, sum_a = 0.0, sum_b = 0.0;
  std::array<cplx, kMaxDim> v{};
  std::array<cplx, 16> u{};
  std::array<cplx, kMaxDim + 1> s{};
  for (size_t c = 0; c < ch.nc; ++c) {
    size_t rest = c / h0;
    const int x0 = static_cast<int>(c % h0);
    s[0] = sym[0][x0];
    for (int a = 1; a < D; ++a) {
      s[a] = sym[a][rest % g.extent(a)];
      rest /= g.extent(a);
    }
    const double mult = (x0 == 0 || 2 * x0 == g.extent(0)) ? 1.0 : 2.0;

    double e = 0.0;
    for (int i = 0; i < d; ++i) {
      v[i] = cplx(ch.data[i][c][0], ch.data[i][c][1]);
      e += std::norm(v[i]);
    }
    int k = 0;
    cplx tr = 0.0;
    for (int i = 0; i < d; ++i)
      for (int j = i; j < d; ++j) {
        if (i == d - 1 && j == d - 1) continue;
        cplx x(ch.data[d + k][c][0], ch.data[d + k][c][1]);
        ++k;
        u[i * 4 + j] = u[j * 4 + i] = x;
        if (i == j) tr += x;
      }
    u[(d - 1) * 4 + (d - 1)] = -tr;
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) e += std::norm(u[i * 4 + j]);
    norm2 += mult * e;

    cplx div = 0.0;
    double sp2 = 0.0;
    for (int i = 0; i < d; ++i) {
      div += s[i] * v[i];
      sp2 += std::norm(s[i]);
    }
    std::array<cplx, kMaxDim> res{};
    for (int i = 0; i < d; ++i) {
      res[i] = s[d] * v[i];
      for (int j = 0; j < d; ++j) res[i] += u[i * 4 + j] * s[j];
    }
    if (sp2 > 0.0) {
      cplx proj = 0.0;
      for (int i = 0; i < d; ++i) proj += std::conj(s[i]) * res[i];
      for (int i = 0; i < d; ++i) res[i] -= s[i] * proj / sp2;
    }
    double b = 0.0;
    for (int i = 0; i < d; ++i) b += std::norm(res[i]);
    b = std::sqrt(b);
    double a = std::abs(div);
    r.max_div = std::max(r.max_div, a);
    r.max_offparallel = std::max(r.max_offparallel, b);
    sum_a += a;
    sum_b += b;
  }
  const double scale = smax * std::sqrt(norm2);
  if (scale > 0.0) {
    r.max_div /= scale;
    r.max_offparallel /= scale;
    r.mean_div = sum_a / scale / ch.nc;
    r.mean_offparallel = sum_b / scale / ch.nc;
  } else {
    r = Residual{};
  }
  return r;
}

namespace {

// Per-axis tables of a separable bump on the grid.
std::array<std::vector<double>, kMaxDim + 1> bump_tables(const Grid& g, const SpatialBump& b) {
  const int D = g.axes();
  std::array<std::vector<double>, kMaxDim + 1> t;
  for (int a = 0; a < D; ++a) {
    t[a].resize(g.extent(a));
    for (int i = 0; i < g.extent(a); ++i) {
      if (b.constant) {
        t[a][i] = 1.0;
        continue;
      }
      std::array<double, kMaxDim + 1> s = b.centre;
      s[a] = (i + 0.5) / g.extent(a);
      t[a][i] = b.value(s, D);
    }
  }
  return t;
}

double table_weight(const std::array<std::vector<double>, kMaxDim + 1>& t, const std::array<int, kMaxDim + 1>& i,
                    int D) {
  double w = 1.0;
  for (int a = 0; a < D; ++a) w *= t[a][i[a]];
  return w;
}

Box unit_box(int D) {
  Box b;
  b.dims = D;
  for (int a = 0; a < D; ++a) {
    b.lo[a] = 0.0;
    b.hi[a] = 1.0;
  }
  return b;
}

}  // namespace

Pairing empirical_pairing(const GridField& f, const TestFunction& fn) {
  SpatialBump one;
  one.constant = true;
  return empirical_pairing(f, fn, one);
}

Pairing empirical_pairing(const GridField& f, const TestFunction& fn, const SpatialBump& weight) {
  const Grid& g = f.grid();
  const int D = g.axes();
  auto t = bump_tables(g, weight);
  double full = 0.0, coarse = 0.0;
  for (size_t p = 0; p < g.points(); ++p) {
    auto i = g.coords(p);
    double x = table_weight(t, i, D) * fn(f.state(p));
    full += x;
    bool even = true;
    for (int a = 0; a < D; ++a) even = even && i[a] % 2 == 0;
    if (even) coarse += x;
  }
  const double cell = g.cell_volume();
  Pairing out;
  out.value = full * cell;
  out.quadrature_error = std::abs(full * cell - coarse * cell * (1 << D));
  return out;
}

std::vector<double> field_bank_pairings(const GridField& f, const TestBank& bank) {
  const Grid& g = f.grid();
  const int D = g.axes();
  if (bank.dim() != g.d) throw InputError("bank dimension mismatch");
  const auto& bumps = bank.bumps();
  const auto& fns = bank.functions();
  const size_t nb = bumps.size(), nf = fns.size();
  std::vector<std::array<std::vector<double>, kMaxDim + 1>> tables;
  for (const SpatialBump& b : bumps) tables.push_back(bump_tables(g, b));

  std::vector<double> acc(nb * nf, 0.0), fv(nf), bv(nb);
  for (size_t p = 0; p < g.points(); ++p) {
    auto i = g.coords(p);
    StatePoint w = f.state(p);
    for (size_t j = 0; j < nf; ++j) fv[j] = fns[j](w);
    for (size_t b = 0; b < nb; ++b) bv[b] = table_weight(tables[b], i, D);
    for (size_t b = 0; b < nb; ++b) {
      if (bv[b] == 0.0) continue;
      for (size_t j = 0; j < nf; ++j) acc[b * nf + j] += bv[b] * fv[j];
    }
  }
  const double cell = g.cell_volume();
  std::vector<double> out;
  for (int diag = 0; diag <= static_cast<int>(nb + nf) - 2; ++diag)
    for (int b = 0; b <= diag; ++b) {
      int j = diag - b;
      if (b >= static_cast<int>(nb) || j >= static_cast<int>(nf)) continue;
      out.push_back(acc[b * nf + j] * cell);
    }
  return out;
}

namespace {

std::vector<double> target_bank_pairings(const DiscreteMeasure& nu, double T, const TestBank& bank) {
  const int D = nu.dim() + 1;
  const auto& bumps = bank.bumps();
  const auto& fns = bank.functions();
  const int nb = static_cast<int>(bumps.size()), nf = static_cast<int>(fns.size());
  std::vector<double> out;
  for (int diag = 0; diag <= nb + nf - 2; ++diag)
    for (int b = 0; b <= diag; ++b) {
      int j = diag - b;
      if (b >= nb || j >= nf) continue;
      double m = T * bumps[b].integral(unit_box(D), D);
      out.push_back(m * nu.expect([&](const StatePoint& w) { return fns[j](w); }));
    }
  return out;
}

}  // namespace

SliceCheck timeslice_convex_check(const GridField& f, const TestFunction& fn, double target, double eps) {
  if (!fn.is_convex()) throw InputError("timeslice_convex_check: test function is not convex");
  const Grid& g = f.grid();
  const size_t ns = g.spatial_points();
  const double vol = 1.0 / static_cast<double>(ns);
  SliceCheck out;
  out.max_slack = -1e300;
  for (int t = 0; t < g.nt; ++t) {
    double s = 0.0;
    for (size_t x = 0; x < ns; ++x) s += fn(f.state(t * ns + x));
    out.slack.push_back(s * vol - target);
    out.max_slack = std::max(out.max_slack, out.slack.back());
  }
  out.pass = out.max_slack < eps;
  return out;
}

double default_state_tolerance(const std::vector<Atom>& atoms) {
  double m = 0.0;
  for (const Atom& a : atoms) m = std::max(m, a.point.norm());
  return 1e-8 * (1.0 + m);
}

Fractions volume_fractions(const GridField& f, const std::vector<Atom>& atoms, double tol_state, double eps) {
  const Grid& g = f.grid();
  for (size_t i = 0; i < atoms.size(); ++i)
    for (size_t j = i + 1; j < atoms.size(); ++j)
      if ((atoms[i].point - atoms[j].point).norm() <= 2.0 * tol_state)
        throw InputError("volume_fractions: atom neighbourhoods overlap");
  const size_t na = atoms.size(), ns = g.spatial_points();
  Fractions out;
  out.total.assign(na, 0.0);
  out.slices.assign(g.nt, std::vector<double>(na, 0.0));
  for (int t = 0; t < g.nt; ++t)
    for (size_t x = 0; x < ns; ++x) {
      StatePoint w = f.state(t * ns + x);
      for (size_t i = 0; i < na; ++i)
        if ((w - atoms[i].point).norm() < tol_state) {
          out.slices[t][i] += 1.0;
          break;
        }
    }
  for (int t = 0; t < g.nt; ++t) {
    const double tc = g.position(g.d, t);
    const bool band = tc > eps * g.T && tc < (1.0 - eps) * g.T;
    for (size_t i = 0; i < na; ++i) {
      out.total[i] += out.slices[t][i];
      out.slices[t][i] /= static_cast<double>(ns);
      if (band) out.max_slice_error = std::max(out.max_slice_error, std::abs(out.slices[t][i] - atoms[i].weight));
    }
  }
  for (size_t i = 0; i < na; ++i) {
    out.total[i] /= static_cast<double>(g.points());
    out.max_error = std::max(out.max_error, std::abs(out.total[i] - atoms[i].weight));
  }
  return out;
}

double euler_defect(const GridField& f) {
  TestFunction def = tf_defect();
  double s = 0.0;
  for (size_t p = 0; p < f.points(); ++p) s += def(f.state(p));
  return s * f.grid().cell_volume();
}

std::vector<double> energy_timeseries(const GridField& f) {
  const Grid& g = f.grid();
  const size_t ns = g.spatial_points();
  std::vector<double> out;
  for (int t = 0; t < g.nt; ++t) {
    double s = 0.0;
    for (size_t x = 0; x < ns; ++x) s += gen_energy(f.state(t * ns + x));
    out.push_back(s / static_cast<double>(ns));
  }
  return out;
}

double sup_norm(const GridField& f) {
  double m = 0.0;
  for (size_t p = 0; p < f.points(); ++p) m = std::max(m, f.state(p).norm());
  return m;
}

bool VerificationReport::pass() const {
  return std::all_of(criteria.begin(), criteria.end(), [](const Criterion& c) { return c.pass; });
}

nlohmann::json VerificationReport::to_json() const {
  nlohmann::json j;
  j["version"] = version;
  j["residual"] = {{"max_div", residual.max_div},
                   {"max_offparallel", residual.max_offparallel},
                   {"mean_div", residual.mean_div},
                   {"mean_offparallel", residual.mean_offparallel}};
  nlohmann::json pe = nlohmann::json::array();
  for (size_t i = 0; i < pairing_errors.size(); ++i) pe.push_back({{"entry", pairing_labels[i]}, {"error", pairing_errors[i]}});
  j["pairing"] = {{"distance", pairing_distance}, {"errors", pe}};
  j["energy_check"] = {{"max_slack", energy_check.max_slack}, {"slack", energy_check.slack}};
  j["fractions"] = {{"total", fractions.total},
                    {"max_error", fractions.max_error},
                    {"max_slice_error", fractions.max_slice_error}};
  j["euler_defect"] = {{"value", euler_defect}, {"target", defect_target}};
  j["energy"] = energy;
  j["sup"] = {{"norm", sup_norm}, {"bound", sup_bound}, {"uniform_constant", uniform_constant}};
  nlohmann::json cr = nlohmann::json::array();
  for (const Criterion& c : criteria)
    cr.push_back({{"name", c.name}, {"value", c.value}, {"threshold", c.threshold}, {"pass", c.pass}});
  j["criteria"] = cr;
  j["pass"] = pass();
  return j;
}

std::string VerificationReport::energy_csv(double T) const {
  std::ostringstream os;
  os << std::setprecision(17) << "t,energy\n";
  const double n = static_cast<double>(energy.size());
  for (size_t t = 0; t < energy.size(); ++t) os << (t + 0.5) * T / n << ',' << energy[t] << '\n';
  return os.str();
}

VerificationReport verify_field(const GridField& f, const DiscreteMeasure& target, const TestBank& bank,
                                const VerifyParams& p) {
  const Grid& g = f.grid();
  if (target.dim() != g.d) throw InputError("verify: target dimension does not match the field");
  VerificationReport r;
  r.residual = subsolution_residual(f);

  std::vector<double> fp = field_bank_pairings(f, bank);
  std::vector<double> tp = target_bank_pairings(target, g.T, bank);
  for (size_t i = 0; i < fp.size(); ++i) {
    r.pairing_labels.push_back(bank.entry(i).label);
    r.pairing_errors.push_back(std::abs(fp[i] - tp[i]));
  }
  r.pairing_distance = bank_distance(fp, tp);

  double e_target = target.expect([](const StatePoint& w) { return gen_energy(w); });
  r.energy_check = timeslice_convex_check(f, tf_energy(), e_target, p.eps);
  r.energy = energy_timeseries(f);

  double tol_state = p.tol_state > 0.0 ? p.tol_state : default_state_tolerance(target.atoms());
  if (p.check_fractions) r.fractions = volume_fractions(f, target.atoms(), tol_state, p.eps);

  r.euler_defect = euler_defect(f);
  TestFunction def = tf_defect();
  double dmax = 0.0;
  for (const Atom& a : target.atoms()) dmax = std::max(dmax, def(a.point));
  r.defect_target = g.T * target.expect([&](const StatePoint& w) { return def(w); });

  double wmax = 0.0;
  for (const Atom& a : target.atoms()) wmax = std::max(wmax, a.point.norm());
  r.sup_norm = sup_norm(f);
  r.sup_bound = wmax + p.eps;
  r.uniform_constant = e_target > 0.0 ? r.sup_norm / e_target : 0.0;

  auto add = [&](std::string name, double v, double thr) { r.criteria.push_back({std::move(name), v, thr, v < thr}); };
  add("residual_div", r.residual.max_div, p.residual_threshold);
  add("residual_momentum", r.residual.max_offparallel, p.residual_threshold);
  r.criteria.push_back({"sup_bound", r.sup_norm, r.sup_bound, r.sup_norm <= r.sup_bound});
  if (p.check_fractions) {
    add("fractions_total", r.fractions.max_error, p.eps);
    add("fractions_slices", r.fractions.max_slice_error, p.eps);
  }
  add("energy_slices", r.energy_check.max_slack, p.eps);
  add("euler_defect", std::abs(r.euler_defect - r.defect_target), p.eps * g.T * std::max(1.0, dmax));
  add("pairing_distance", r.pairing_distance, p.eps);
  return r;
}

std::string GenerationStudy::csv() const {
  std::ostringstream os;
  os << std::setprecision(10);
  os << "k,pairing_distance,residual_div,residual_momentum,max_slice_energy_slack,fraction_error,slice_fraction_error,"
        "sup_norm";
  if (!rows.empty())
    for (size_t i = 0; i < rows[0].report.pairing_labels.size(); ++i)
      if (rows[0].report.pairing_labels[i].rfind("bump0:", 0) == 0) os << ",err_" << rows[0].report.pairing_labels[i].substr(6);
  os << '\n';
  for (const GenerationRow& row : rows) {
    const VerificationReport& r = row.report;
    os << row.k << ',' << r.pairing_distance << ',' << r.residual.max_div << ',' << r.residual.max_offparallel << ','
       << r.energy_check.max_slack << ',' << r.fractions.max_error << ',' << r.fractions.max_slice_error << ','
       << r.sup_norm;
    for (size_t i = 0; i < r.pairing_labels.size(); ++i)
      if (r.pairing_labels[i].rfind("bump0:", 0) == 0) os << ',' << r.pairing_errors[i];
    os << '\n';
  }
  return os.str();
}

GenerationStudy generation_report(const std::vector<int>& ks, const std::function<GridField(int)>& make,
                                  const DiscreteMeasure& target, const TestBank& bank, const VerifyParams& p) {
  GenerationStudy s;
  for (int k : ks) s.rows.push_back({k, verify_field(make(k), target, bank, p)});
  s.monotone = true;
  for (size_t i = 1; i < s.rows.size(); ++i)
    if (s.rows[i].report.pairing_distance > s.rows[i - 1].report.pairing_distance + 1e-14) s.monotone = false;
  return s;
}

}  // namespace ymgen
