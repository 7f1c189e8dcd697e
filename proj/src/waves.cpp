#include "ymgen/waves.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include <fftw3.h>

#include "ymgen/approximation.hpp"

namespace ymgen {

namespace {

constexpr double kPi = std::numbers::pi;

void fix_sign(Vec& x) {
  for (int i = 0; i < x.dim(); ++i) {
    if (std::abs(x[i]) > 1e-12) {
      if (x[i] < 0) x *= -1.0;
      return;
    }
  }
}

}  // namespace

SymMatrix lifted_matrix(const StatePoint& w, double q) {
  const int d = w.dim();
  SymMatrix U(d + 1);
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) U(i, j) = w.u(i, j) + (i == j ? q : 0.0);
    U(i, d) = U(d, i) = w.v[i];
  }
  return U;
}

namespace {

struct RootPoly {
  EigenSystem es;
  std::array<double, kMaxDim> c{};
  int d = 0;

  explicit RootPoly(const StatePoint& w) : es(eigen_sym(w.u.matrix())), d(w.dim()) {
    for (int i = 0; i < d; ++i) {
      double x = es.vectors[i].dot(w.v);
      c[i] = x * x;
    }
  }

  double operator()(double q) const {
    double p = 0.0;
    for (int i = 0; i < d; ++i) {
      double prod = c[i];
      for (int j = 0; j < d; ++j)
        if (j != i) prod *= es.values[j] + q;
      p -= prod;
    }
    return p;
  }
};

double bisect(const RootPoly& p, double a, double b) {
  double pa = p(a);
  for (int it = 0; it < 400 && b - a > 0.0; ++it) {
    double m = 0.5 * (a + b);
    if (m <= a || m >= b) break;
    double pm = p(m);
    if ((pm < 0) == (pa < 0)) {
      a = m;
      pa = pm;
    } else {
      b = m;
    }
  }
  return std::abs(p(a)) <= std::abs(p(b)) ? a : b;
}

}  // namespace

double lifted_det(const StatePoint& w, double q) { return RootPoly(w)(q); }

double pressure_root(const StatePoint& wbar) {
  const int d = wbar.dim();
  check_dim(d);
  if (wbar.v.norm2() == 0.0) throw InfeasibleError("pressure_root: zero velocity amplitude has no admissible wave direction");
  RootPoly p(wbar);
  double lmax = 0.0;
  for (int i = 0; i < d; ++i) lmax = std::max(lmax, std::abs(p.es.values[i]));

  double q = 0.0;
  if (d == 2) {
    double s = p.c[0] + p.c[1];
    q = -(p.c[0] * p.es.values[1] + p.c[1] * p.es.values[0]) / s;
  } else {
    double mid = -p.es.values[1];
    if (p(mid) == 0.0) {
      q = mid;
    } else {
      double step = 1.0 + lmax;
      double lo = mid - step, hi = mid + step;
      for (int it = 0; it < 200 && p(lo) >= 0.0; ++it) lo = mid - (step *= 2.0);
      step = 1.0 + lmax;
      for (int it = 0; it < 200 && p(hi) >= 0.0; ++it) hi = mid + (step *= 2.0);
      if (p(lo) >= 0.0 || p(hi) >= 0.0) {
        std::ostringstream os;
        os << "pressure_root: bracket failure, p(mid)=" << p(mid) << " p(lo)=" << p(lo) << " p(hi)=" << p(hi);
        throw InfeasibleError(os.str());
      }
      double r1 = bisect(p, lo, mid), r2 = bisect(p, mid, hi);
      q = std::abs(r1) < std::abs(r2) || (std::abs(r1) == std::abs(r2) && r1 > r2) ? r1 : r2;
    }
  }
  double scale = wbar.v.norm2() * std::pow(1.0 + lmax + std::abs(q), d - 1);
  if (std::abs(p(q)) > tol().det_root * scale) {
    std::ostringstream os;
    os << "pressure_root: residual " << p(q) << " exceeds " << tol().det_root * scale;
    throw InfeasibleError(os.str());
  }
  return q;
}

void WaveSpec::check() const {
  const int n = U.size();
  double scale = std::max(1.0, U.frobenius());
  Vec r = U.apply(eta);
  if (r.norm() > 1e-10 * scale) throw VerificationError("wave: U eta is not zero");
  if (std::abs(eta.norm() - 1.0) > 1e-12) throw VerificationError("wave: eta is not a unit vector");
  if (std::abs(eta[n - 1]) >= 1.0 - 1e-10) throw VerificationError("wave: eta is the time axis");
  if (std::abs(U(n - 1, n - 1)) > 0.0) throw VerificationError("wave: U has a nonzero corner");
  SymMatrix s(n);
  for (const auto& [lam, f] : eigs) {
    s += lam * outer(f, f);
    if (std::abs(f.dot(eta)) > 1e-10) throw VerificationError("wave: eigenvector not orthogonal to eta");
  }
  if ((s - U).frobenius() > 1e-10 * scale) throw VerificationError("wave: eigen decomposition does not rebuild U");
}

WaveSpec wave_with_direction(const StatePoint& wbar, double qbar, const Vec& eta_in) {
  WaveSpec ws;
  ws.wbar = wbar;
  ws.qbar = qbar;
  ws.U = lifted_matrix(wbar, qbar);
  const int n = ws.U.size();
  ws.eta = (1.0 / eta_in.norm()) * eta_in;
  fix_sign(ws.eta);

  // Project onto eta-perp and drop the eigenvector aligned with eta.
  SymMatrix P = SymMatrix::identity(n) - outer(ws.eta, ws.eta);
  SymMatrix Pu(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      double s = 0.0;
      for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b) s += P(i, a) * ws.U(a, b) * P(b, j);
      Pu(i, j) = s;
    }
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) Pu(i, j) = Pu(j, i) = 0.5 * (Pu(i, j) + Pu(j, i));
  EigenSystem es = eigen_sym(Pu);
  int drop = 0;
  for (int k = 1; k < n; ++k)
    if (std::abs(es.vectors[k].dot(ws.eta)) > std::abs(es.vectors[drop].dot(ws.eta))) drop = k;
  for (int k = 0; k < n; ++k) {
    if (k == drop) continue;
    Vec f = es.vectors[k] - ws.eta.dot(es.vectors[k]) * ws.eta;
    f *= 1.0 / f.norm();
    ws.eigs.push_back({es.values[k], f});
  }
  ws.check();
  return ws;
}

WaveSpec wave_direction(const StatePoint& wbar, double qbar) {
  SymMatrix U = lifted_matrix(wbar, qbar);
  EigenSystem es = eigen_sym(U);
  int k0 = 0;
  for (int k = 1; k < es.n; ++k)
    if (std::abs(es.values[k]) < std::abs(es.values[k0])) k0 = k;
  if (std::abs(es.values[k0]) > 1e-8 * std::max(1.0, U.frobenius()))
    throw InputError("wave_direction: lifted matrix has trivial kernel, q is not a pressure root");
  return wave_with_direction(wbar, qbar, es.vectors[k0]);
}

WaveSpec make_wave(const StatePoint& wbar) { return wave_direction(wbar, pressure_root(wbar)); }

PotentialSymbol::PotentialSymbol(const WaveSpec& ws) : PotentialSymbol(ws.U, ws.eta) {}

PotentialSymbol::PotentialSymbol(const SymMatrix& U, const Vec& eta_in) : n_(U.size()) {
  const int n = n_;
  Vec eta = (1.0 / eta_in.norm()) * eta_in;
  Vec e = Vec::unit(n, n - 1);
  double sig = std::sqrt(std::max(0.0, 1.0 - eta[n - 1] * eta[n - 1]));
  if (sig < 1e-10) throw InputError("potential symbol: direction is the time axis");
  Vec p = (1.0 / sig) * (e - eta[n - 1] * eta);
  Vec pp = (1.0 / sig) * (eta - eta[n - 1] * e);

  std::vector<Vec> g;
  for (int a = 0; a < n && static_cast<int>(g.size()) < n - 2; ++a) {
    Vec x = Vec::unit(n, a);
    x -= x.dot(eta) * eta;
    x -= x.dot(p) * p;
    for (const Vec& y : g) x -= x.dot(y) * y;
    if (x.norm() > 1e-6) g.push_back((1.0 / x.norm()) * x);
  }
  const int m = static_cast<int>(g.size());

  auto wedge = [n](const Vec& a, const Vec& b) {
    std::array<double, 16> w{};
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) w[i * 4 + j] = a[i] * b[j] - b[i] * a[j];
    return w;
  };
  std::vector<std::array<double, 16>> B(m);
  for (int a = 0; a < m; ++a) {
    B[a] = wedge(g[a], pp);
    for (double& x : B[a]) x /= sig;
  }
  std::array<double, 16> C = wedge(p, eta);

  for (int a = 0; a < m; ++a) {
    Vec Ug = U.apply(g[a]);
    double c = p.dot(Ug);
    for (int b = 0; b < m; ++b) {
      double G = g[b].dot(Ug);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
          for (int k = 0; k < n; ++k)
            for (int l = 0; l < n; ++l) k_[((i * 4 + j) * 4 + k) * 4 + l] += G * B[a][i * 4 + k] * B[b][j * 4 + l];
    }
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k)
          for (int l = 0; l < n; ++l)
            k_[((i * 4 + j) * 4 + k) * 4 + l] += c * (B[a][i * 4 + k] * C[j * 4 + l] + C[i * 4 + k] * B[a][j * 4 + l]);
  }
}

SymMatrix PotentialSymbol::apply(const SymMatrix& H) const {
  SymMatrix out(n_);
  for (int i = 0; i < n_; ++i)
    for (int j = i; j < n_; ++j) {
      double s = 0.0;
      for (int k = 0; k < n_; ++k)
        for (int l = 0; l < n_; ++l) s += (*this)(i, j, k, l) * H(k, l);
      out(i, j) = out(j, i) = s;
    }
  return out;
}

void PotentialSymbol::apply(const std::array<std::complex<double>, kMaxDim + 1>& s,
                            std::array<std::complex<double>, 16>& out) const {
  out.fill(0.0);
  for (int i = 0; i < n_; ++i)
    for (int j = 0; j < n_; ++j) {
      std::complex<double> acc = 0.0;
      for (int k = 0; k < n_; ++k)
        for (int l = 0; l < n_; ++l) acc += (*this)(i, j, k, l) * s[k] * s[l];
      out[i * 4 + j] = acc;
    }
}

// ---------------------------------------------------------------- staircase

namespace {

// Fourier transform of the normalized bump at frequency w, trapezoid rule.
double bump_symbol(double w) {
  int n = 256 + static_cast<int>(16.0 * std::abs(w));
  double h = 2.0 / n, s = 0.0;
  for (int i = 1; i < n; ++i) {
    double x = -1.0 + i * h;
    s += mollifier_bump(x) * std::cos(2.0 * kPi * w * x);
  }
  return s * h;
}

std::complex<double> step_coefficient(double mu2, int n) {
  const std::complex<double> I(0.0, 1.0);
  return (1.0 - std::exp(-2.0 * kPi * I * static_cast<double>(n) * mu2)) / (2.0 * kPi * I * static_cast<double>(n));
}

double series(const std::vector<std::complex<double>>& c, double s, int power) {
  double out = 0.0;
  for (size_t n = 1; n < c.size(); ++n) {
    double f = 1.0;
    if (power == 2) f = -4.0 * kPi * kPi * static_cast<double>(n * n);
    std::complex<double> e = std::polar(1.0, 2.0 * kPi * static_cast<double>(n) * s);
    out += 2.0 * f * (c[n] * e).real();
  }
  return out;
}

}  // namespace

double OscillationProfile::h(double s) const { return series(h_hat, s, 0); }
double OscillationProfile::H(double s) const { return series(H_hat, s, 0); }
double OscillationProfile::H2(double s) const { return series(H_hat, s, 2); }

OscillationProfile staircase_profile(double mu1, double mu2, double delta, int modes) {
  if (!(mu1 > 0 && mu2 > 0) || std::abs(mu1 + mu2 - 1.0) > tol().probability)
    throw InputError("staircase_profile: weights must be positive and sum to one");
  if (!(delta > 0.0) || delta >= std::min(mu1, mu2) / 4.0)
    throw InputError("staircase_profile: delta must lie in (0, min(mu)/4)");
  if (modes < 0) throw InputError("staircase_profile: negative mode count");

  // Term magnitudes until the mollifier symbol is negligible.
  std::vector<double> mag{0.0};
  int quiet = 0;
  for (int n = 1; n < 2000000 && quiet < 64; ++n) {
    double t = 2.0 * std::abs(step_coefficient(mu2, n)) * std::abs(bump_symbol(delta * n));
    mag.push_back(t);
    quiet = t < 1e-18 ? quiet + 1 : 0;
  }
  std::vector<double> tail(mag.size() + 1, 0.0);
  for (size_t n = mag.size(); n-- > 0;) tail[n] = tail[n + 1] + mag[n];

  constexpr double kFlat = 1e-8;
  if (modes == 0) {
    modes = 1;
    while (modes + 1 < static_cast<int>(mag.size()) && tail[modes + 1] > 1e-12) ++modes;
  }
  double bound = modes + 1 < static_cast<int>(tail.size()) ? tail[modes + 1] : 0.0;
  if (bound > kFlat) throw InputError("staircase_profile: too few modes for the flatness tolerance");

  OscillationProfile p;
  p.mu1 = mu1;
  p.mu2 = mu2;
  p.delta = delta;
  p.modes = modes;
  p.truncation_bound = bound;
  p.h_hat.assign(modes + 1, 0.0);
  p.H_hat.assign(modes + 1, 0.0);
  for (int n = 1; n <= modes; ++n) {
    p.h_hat[n] = step_coefficient(mu2, n) * bump_symbol(delta * n);
    p.H_hat[n] = p.h_hat[n] / (-4.0 * kPi * kPi * static_cast<double>(n) * n);
  }
  return p;
}

double staircase_reference(double mu1, double mu2, double delta, double s) {
  auto F = [](double x) { return x <= -1.0 ? 0.0 : x >= 1.0 ? 1.0 : mollifier_cdf(x); };
  s -= std::floor(s);
  double mass = 0.0;
  for (int j = -1; j <= 1; ++j) mass += F((s - j) / delta) - F((s - j - mu2) / delta);
  return mass * (mu1 + mu2) - mu2;
}

// ---------------------------------------------------------- potential_apply

GridField potential_apply(const PotentialSymbol& K, const HessianJet& phi, const Grid& g) {
  if (K.size() != g.axes()) throw InputError("potential_apply: symbol size does not match the grid");
  GridField f(g, Stencil::Spectral);
  const int D = g.axes();
  for (size_t p = 0; p < g.points(); ++p) {
    auto i = g.coords(p);
    std::array<double, kMaxDim + 1> y{};
    for (int a = 0; a < D; ++a) y[a] = g.position(a, i[a]);
    f.add_lifted(p, K.apply(phi(y)));
  }
  return f;
}

namespace {

std::array<int, kMaxDim + 1> fftw_dims(const Grid& g, int& rank) {
  rank = g.axes();
  std::array<int, kMaxDim + 1> n{};
  for (int a = 0; a < rank; ++a) n[a] = g.extent(rank - 1 - a);
  return n;
}

GridField apply_forward(const PotentialSymbol& K, const ScalarGrid& phi) {
  const Grid& g = phi.grid();
  const int D = g.axes();
  GridField f(g, Stencil::Forward);
  std::array<size_t, kMaxDim + 1> stride{};
  size_t s = 1;
  for (int a = 0; a < D; ++a) {
    stride[a] = s;
    s *= g.extent(a);
  }
  auto shift = [&](size_t p, const std::array<int, kMaxDim + 1>& i, int a) {
    return i[a] + 1 < g.extent(a) ? p + stride[a] : p - (g.extent(a) - 1) * stride[a];
  };
  for (size_t p = 0; p < g.points(); ++p) {
    auto i = g.coords(p);
    SymMatrix H(D);
    for (int k = 0; k < D; ++k) {
      size_t pk = shift(p, i, k);
      auto ik = i;
      ik[k] = (ik[k] + 1) % g.extent(k);
      for (int l = k; l < D; ++l) {
        size_t pl = shift(p, i, l);
        size_t pkl = shift(pk, ik, l);
        double v = (phi[pkl] - phi[pk] - phi[pl] + phi[p]) / (g.spacing(k) * g.spacing(l));
        H(k, l) = H(l, k) = v;
      }
    }
    f.add_lifted(p, K.apply(H));
  }
  return f;
}

GridField apply_spectral(const PotentialSymbol& K, const ScalarGrid& phi) {
  const Grid& g = phi.grid();
  const int D = g.axes();
  int rank = 0;
  auto dims = fftw_dims(g, rank);
  const size_t N = g.points();
  const size_t nc = N / g.extent(0) * (g.extent(0) / 2 + 1);

  double* real = fftw_alloc_real(N);
  fftw_complex* spectrum = fftw_alloc_complex(nc);
  fftw_complex* work = fftw_alloc_complex(nc);
  fftw_plan fwd = fftw_plan_dft_r2c(rank, dims.data(), real, spectrum, FFTW_ESTIMATE);
  fftw_plan inv = fftw_plan_dft_c2r(rank, dims.data(), work, real, FFTW_ESTIMATE);
  std::copy(phi.data().begin(), phi.data().end(), real);
  fftw_execute(fwd);

  // Complex layout: x_0 is the halved, fastest axis.
  const int h0 = g.extent(0) / 2 + 1;
  auto mode = [&](size_t c, std::array<int, kMaxDim + 1>& kap) {
    kap[0] = static_cast<int>(c % h0);
    size_t r = c / h0;
    for (int a = 1; a < D; ++a) {
      int n = g.extent(a);
      int x = static_cast<int>(r % n);
      r /= n;
      kap[a] = x <= n / 2 ? x : x - n;
    }
  };

  double total = 0.0, nyq = 0.0;
  for (size_t c = 0; c < nc; ++c) {
    std::array<int, kMaxDim + 1> kap{};
    mode(c, kap);
    double e = spectrum[c][0] * spectrum[c][0] + spectrum[c][1] * spectrum[c][1];
    total += e;
    for (int a = 0; a < D; ++a)
      if (std::abs(kap[a]) * 2 == g.extent(a)) {
        nyq += e;
        break;
      }
  }
  if (total > 0.0 && nyq > 1e-20 * total) {
    fftw_destroy_plan(fwd);
    fftw_destroy_plan(inv);
    fftw_free(real);
    fftw_free(spectrum);
    fftw_free(work);
    throw InputError("potential_apply: input is not band-limited (Nyquist energy present)");
  }

  GridField f(g, Stencil::Spectral);
  for (int k = 0; k < D; ++k)
    for (int l = k; l < D; ++l) {
      for (size_t c = 0; c < nc; ++c) {
        std::array<int, kMaxDim + 1> kap{};
        mode(c, kap);
        double sk = std::abs(kap[k]) * 2 == g.extent(k) ? 0.0 : 2.0 * kPi * kap[k] / g.length(k);
        double sl = std::abs(kap[l]) * 2 == g.extent(l) ? 0.0 : 2.0 * kPi * kap[l] / g.length(l);
        double m = -sk * sl / static_cast<double>(N);
        work[c][0] = m * spectrum[c][0];
        work[c][1] = m * spectrum[c][1];
      }
      fftw_execute(inv);
      for (size_t p = 0; p < N; ++p) {
        SymMatrix H(D);
        H(k, l) = H(l, k) = real[p];
        f.add_lifted(p, K.apply(H));
      }
    }
  fftw_destroy_plan(fwd);
  fftw_destroy_plan(inv);
  fftw_free(real);
  fftw_free(spectrum);
  fftw_free(work);
  return f;
}

}  // namespace

GridField potential_apply(const PotentialSymbol& K, const ScalarGrid& phi, Stencil stencil) {
  if (K.size() != phi.grid().axes()) throw InputError("potential_apply: symbol size does not match the grid");
  return stencil == Stencil::Forward ? apply_forward(K, phi) : apply_spectral(K, phi);
}

// ------------------------------------------------------------ cube exhaustion

Region Region::full(const Grid& g, bool time_cut) {
  Region r;
  for (int a = 0; a < g.axes(); ++a) {
    r.lo[a] = 0;
    r.len[a] = g.extent(a);
    r.cut[a] = false;
  }
  r.cut[g.d] = time_cut;
  return r;
}

size_t Region::points(int axes) const {
  size_t n = 1;
  for (int a = 0; a < axes; ++a) n *= len[a];
  return n;
}

CubeSet cube_exhaustion(const Grid& g, const Region& region, const std::function<bool(size_t)>& inside, double eps,
                        int min_side) {
  const int D = g.axes();
  CubeSet out;
  const size_t n = region.points(D);
  if (n == 0) return out;
  std::array<size_t, kMaxDim + 1> stride{};
  size_t s = 1;
  for (int a = 0; a < D; ++a) {
    stride[a] = s;
    s *= region.len[a];
  }
  auto global = [&](const std::array<int, kMaxDim + 1>& loc) {
    std::array<int, kMaxDim + 1> i{};
    for (int a = 0; a < D; ++a) i[a] = region.lo[a] + loc[a];
    return g.index(i);
  };
  auto local = [&](size_t q) {
    std::array<int, kMaxDim + 1> loc{};
    for (int a = 0; a < D; ++a) {
      loc[a] = static_cast<int>(q % region.len[a]);
      q /= region.len[a];
    }
    return loc;
  };

  std::vector<char> in(n), covered(n, 0);
  size_t count = 0;
  for (size_t q = 0; q < n; ++q) {
    in[q] = inside(global(local(q))) ? 1 : 0;
    count += in[q];
  }
  const double cell = g.cell_volume();
  out.region_volume = count * cell;
  if (count == 0 || out.uncovered() < eps) return out;

  int smax = region.len[0];
  for (int a = 1; a < D; ++a) smax = std::min(smax, region.len[a]);
  int side = 1;
  while (side * 2 <= smax) side *= 2;

  for (; side >= std::max(1, min_side); side /= 2) {
    std::array<int, kMaxDim + 1> cnt{};
    size_t cubes = 1;
    for (int a = 0; a < D; ++a) {
      cnt[a] = region.len[a] / side;
      cubes *= cnt[a];
    }
    for (size_t c = 0; c < cubes && out.uncovered() >= eps; ++c) {
      std::array<int, kMaxDim + 1> corner{};
      size_t r = c;
      for (int a = 0; a < D; ++a) {
        corner[a] = static_cast<int>(r % cnt[a]) * side;
        r /= cnt[a];
      }
      size_t q0 = 0;
      for (int a = 0; a < D; ++a) q0 += corner[a] * stride[a];
      if (covered[q0]) continue;
      size_t vol = 1;
      for (int a = 0; a < D; ++a) vol *= side;
      bool ok = true;
      for (size_t t = 0; t < vol && ok; ++t) {
        size_t rr = t, q = q0;
        for (int a = 0; a < D; ++a) {
          q += (rr % side) * stride[a];
          rr /= side;
        }
        ok = in[q] && !covered[q];
      }
      if (!ok) continue;
      for (size_t t = 0; t < vol; ++t) {
        size_t rr = t, q = q0;
        for (int a = 0; a < D; ++a) {
          q += (rr % side) * stride[a];
          rr /= side;
        }
        covered[q] = 1;
      }
      Cube cb;
      for (int a = 0; a < D; ++a) cb.corner[a] = region.lo[a] + corner[a];
      cb.side = side;
      out.cubes.push_back(cb);
      out.covered_volume += vol * cell;
    }
    if (out.uncovered() < eps) return out;
  }
  out.depth_limited = out.uncovered() >= eps;
  return out;
}

}  // namespace ymgen
