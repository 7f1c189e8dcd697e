#include "ymgen/algebra.hpp"

#include <algorithm>
#include <string>

namespace ymgen {

void check_dim(int d) {
  if (d < 2 || d > kMaxDim) throw InputError("dimension must be 2 or 3, got " + std::to_string(d));
}

// ---- Vec

Vec::Vec(int d) : d_(d) {
  if (d < 0 || d > kMaxDim + 1) throw InputError("vector length out of range");
}

Vec::Vec(std::initializer_list<double> xs) : d_(static_cast<int>(xs.size())) {
  if (d_ > kMaxDim + 1) throw InputError("vector length out of range");
  std::copy(xs.begin(), xs.end(), c_.begin());
}

Vec Vec::unit(int d, int i) {
  Vec e(d);
  e[i] = 1.0;
  return e;
}

double Vec::norm2() const { return dot(*this); }

double Vec::dot(const Vec& o) const {
  if (o.d_ != d_) throw InputError("vector dimension mismatch");
  double s = 0.0;
  for (int i = 0; i < d_; ++i) s += c_[i] * o.c_[i];
  return s;
}

Vec& Vec::operator+=(const Vec& o) {
  if (o.d_ != d_) throw InputError("vector dimension mismatch");
  for (int i = 0; i < d_; ++i) c_[i] += o.c_[i];
  return *this;
}

Vec& Vec::operator-=(const Vec& o) {
  if (o.d_ != d_) throw InputError("vector dimension mismatch");
  for (int i = 0; i < d_; ++i) c_[i] -= o.c_[i];
  return *this;
}

Vec& Vec::operator*=(double s) {
  for (int i = 0; i < d_; ++i) c_[i] *= s;
  return *this;
}

Vec operator+(Vec a, const Vec& b) { return a += b; }
Vec operator-(Vec a, const Vec& b) { return a -= b; }
Vec operator-(Vec a) { return a *= -1.0; }
Vec operator*(double s, Vec a) { return a *= s; }

// ---- SymMatrix

SymMatrix::SymMatrix(int n) : n_(n) {
  if (n < 1 || n > 4) throw InputError("matrix size out of range");
}

SymMatrix SymMatrix::identity(int n) {
  SymMatrix m(n);
  for (int i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

bool SymMatrix::is_symmetric(double t) const {
  double scale = 0.0;
  for (int i = 0; i < n_ * 4; ++i) scale = std::max(scale, std::abs(a_[i]));
  for (int i = 0; i < n_; ++i)
    for (int j = i + 1; j < n_; ++j)
      if (std::abs((*this)(i, j) - (*this)(j, i)) > t * std::max(1.0, scale)) return false;
  return true;
}

double SymMatrix::trace() const {
  double s = 0.0;
  for (int i = 0; i < n_; ++i) s += (*this)(i, i);
  return s;
}

double SymMatrix::frobenius() const {
  double s = 0.0;
  for (int i = 0; i < n_; ++i)
    for (int j = 0; j < n_; ++j) s += (*this)(i, j) * (*this)(i, j);
  return std::sqrt(s);
}

Vec SymMatrix::apply(const Vec& x) const {
  if (x.dim() != n_) throw InputError("matrix-vector dimension mismatch");
  Vec y(n_);
  for (int i = 0; i < n_; ++i)
    for (int j = 0; j < n_; ++j) y[i] += (*this)(i, j) * x[j];
  return y;
}

SymMatrix& SymMatrix::operator+=(const SymMatrix& o) {
  if (o.n_ != n_) throw InputError("matrix dimension mismatch");
  for (int i = 0; i < 16; ++i) a_[i] += o.a_[i];
  return *this;
}

SymMatrix& SymMatrix::operator-=(const SymMatrix& o) {
  if (o.n_ != n_) throw InputError("matrix dimension mismatch");
  for (int i = 0; i < 16; ++i) a_[i] -= o.a_[i];
  return *this;
}

SymMatrix& SymMatrix::operator*=(double s) {
  for (double& x : a_) x *= s;
  return *this;
}

SymMatrix operator+(SymMatrix a, const SymMatrix& b) { return a += b; }
SymMatrix operator-(SymMatrix a, const SymMatrix& b) { return a -= b; }
SymMatrix operator*(double s, SymMatrix a) { return a *= s; }

SymMatrix outer(const Vec& a, const Vec& b) {
  if (a.dim() != b.dim()) throw InputError("outer product dimension mismatch");
  SymMatrix m(a.dim());
  for (int i = 0; i < a.dim(); ++i)
    for (int j = 0; j < a.dim(); ++j) m(i, j) = 0.5 * (a[i] * b[j] + b[i] * a[j]);
  return m;
}

namespace {

EigenSystem eigen_2x2(const SymMatrix& a) {
  EigenSystem es;
  es.n = 2;
  double p = a(0, 0), q = a(1, 1), r = a(0, 1);
  double mean = 0.5 * (p + q);
  double half = 0.5 * (p - q);
  double rad = std::hypot(half, r);
  es.values = {mean - rad, mean + rad, 0.0, 0.0};
  // eigenvector of the larger eigenvalue, rotation angle from atan2
  double theta = 0.5 * std::atan2(2.0 * r, p - q);
  double c = std::cos(theta), s = std::sin(theta);
  es.vectors[1] = Vec{c, s};
  es.vectors[0] = Vec{-s, c};
  return es;
}

EigenSystem eigen_jacobi(const SymMatrix& in) {
  const int n = in.size();
  SymMatrix a = in;
  SymMatrix v = SymMatrix::identity(n);
  double scale = std::max(in.frobenius(), 1e-300);

  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) off += a(i, j) * a(i, j);
    if (std::sqrt(off) <= tol().jacobi * scale) break;

    for (int p = 0; p < n; ++p) {
      for (int q = p + 1; q < n; ++q) {
        if (a(p, q) == 0.0) continue;
        double theta = (a(q, q) - a(p, p)) / (2.0 * a(p, q));
        double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        double c = 1.0 / std::sqrt(t * t + 1.0);
        double s = t * c;
        for (int k = 0; k < n; ++k) {
          double akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (int k = 0; k < n; ++k) {
          double apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        for (int k = 0; k < n; ++k) {
          double vkp = v(k, p), vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }

  std::array<int, 4> order{0, 1, 2, 3};
  std::sort(order.begin(), order.begin() + n, [&](int x, int y) { return a(x, x) < a(y, y); });
  EigenSystem es;
  es.n = n;
  for (int k = 0; k < n; ++k) {
    int col = order[k];
    es.values[k] = a(col, col);
    Vec e(n);
    for (int i = 0; i < n; ++i) e[i] = v(i, col);
    es.vectors[k] = e;
  }
  return es;
}

}  // namespace

EigenSystem eigen_sym(const SymMatrix& a) {
  if (!a.is_symmetric(tol().symmetry)) throw InputError("matrix is not symmetric");
  if (a.size() == 1) {
    EigenSystem es;
    es.n = 1;
    es.values[0] = a(0, 0);
    es.vectors[0] = Vec{1.0};
    return es;
  }
  if (a.size() == 2) return eigen_2x2(a);
  return eigen_jacobi(a);
}

double lambda_max(const SymMatrix& a) {
  EigenSystem es = eigen_sym(a);
  return es.values[es.n - 1];
}

double op_norm_inf(const SymMatrix& a) {
  EigenSystem es = eigen_sym(a);
  return std::max(std::abs(es.values[0]), std::abs(es.values[es.n - 1]));
}

// ---- TracelessSym

TracelessSym::TracelessSym(int d) : d_(d) { check_dim(d); }

TracelessSym TracelessSym::from_free(int d, std::span<const double> free) {
  TracelessSym u(d);
  if (static_cast<int>(free.size()) != free_count(d))
    throw InputError("u_upper must have " + std::to_string(free_count(d)) + " entries");
  std::copy(free.begin(), free.end(), u.f_.begin());
  return u;
}

TracelessSym TracelessSym::from_matrix(const SymMatrix& m) {
  int d = m.size();
  check_dim(d);
  if (!m.is_symmetric(tol().symmetry)) throw InputError("matrix is not symmetric");
  if (std::abs(m.trace()) > tol().trace * std::max(1.0, m.frobenius()))
    throw InputError("matrix is not traceless");
  TracelessSym u(d);
  int k = 0;
  for (int i = 0; i < d; ++i)
    for (int j = i; j < d; ++j) {
      if (i == d - 1 && j == d - 1) continue;
      u.f_[k++] = 0.5 * (m(i, j) + m(j, i));
    }
  return u;
}

double TracelessSym::operator()(int i, int j) const {
  if (i > j) std::swap(i, j);
  if (i == d_ - 1) {
    double s = 0.0;
    for (int a = 0; a < d_ - 1; ++a) s += (*this)(a, a);
    return -s;
  }
  // offset of row i in the packed upper triangle
  int k = i * d_ - i * (i - 1) / 2 + (j - i);
  return f_[k];
}

SymMatrix TracelessSym::matrix() const {
  SymMatrix m(d_);
  for (int i = 0; i < d_; ++i)
    for (int j = 0; j < d_; ++j) m(i, j) = (*this)(i, j);
  return m;
}

double TracelessSym::frobenius2() const {
  double s = 0.0;
  for (int i = 0; i < d_; ++i)
    for (int j = 0; j < d_; ++j) s += (*this)(i, j) * (*this)(i, j);
  return s;
}

double TracelessSym::contract(const TracelessSym& o) const {
  if (o.d_ != d_) throw InputError("matrix dimension mismatch");
  double s = 0.0;
  for (int i = 0; i < d_; ++i)
    for (int j = 0; j < d_; ++j) s += (*this)(i, j) * o(i, j);
  return s;
}

TracelessSym& TracelessSym::operator+=(const TracelessSym& o) {
  if (o.d_ != d_) throw InputError("matrix dimension mismatch");
  for (int k = 0; k < kMaxFree; ++k) f_[k] += o.f_[k];
  return *this;
}

TracelessSym& TracelessSym::operator-=(const TracelessSym& o) {
  if (o.d_ != d_) throw InputError("matrix dimension mismatch");
  for (int k = 0; k < kMaxFree; ++k) f_[k] -= o.f_[k];
  return *this;
}

TracelessSym& TracelessSym::operator*=(double s) {
  for (double& x : f_) x *= s;
  return *this;
}

TracelessSym operator+(TracelessSym a, const TracelessSym& b) { return a += b; }
TracelessSym operator-(TracelessSym a, const TracelessSym& b) { return a -= b; }
TracelessSym operator-(TracelessSym a) { return a *= -1.0; }
TracelessSym operator*(double s, TracelessSym a) { return a *= s; }

// ---- StatePoint

StatePoint::StatePoint(Vec v_, TracelessSym u_) : v(v_), u(u_) {
  if (v.dim() != u.dim()) throw InputError("state point: v and u dimensions differ");
  check_dim(v.dim());
}

StatePoint& StatePoint::operator+=(const StatePoint& o) {
  v += o.v;
  u += o.u;
  return *this;
}

StatePoint& StatePoint::operator-=(const StatePoint& o) {
  v -= o.v;
  u -= o.u;
  return *this;
}

StatePoint& StatePoint::operator*=(double s) {
  v *= s;
  u *= s;
  return *this;
}

StatePoint operator+(StatePoint a, const StatePoint& b) { return a += b; }
StatePoint operator-(StatePoint a, const StatePoint& b) { return a -= b; }
StatePoint operator-(StatePoint a) { return a *= -1.0; }
StatePoint operator*(double s, StatePoint a) { return a *= s; }

// ---- energy and sphere

TracelessSym ocircle(const Vec& v) {
  int d = v.dim();
  check_dim(d);
  SymMatrix m = outer(v, v);
  double r = v.norm2() / d;
  for (int i = 0; i < d; ++i) m(i, i) -= r;
  TracelessSym u(d);
  int k = 0;
  for (int i = 0; i < d; ++i)
    for (int j = i; j < d; ++j)
      if (!(i == d - 1 && j == d - 1)) u.free_at(k++) = m(i, j);
  return u;
}

double op_norm_inf(const TracelessSym& u) { return op_norm_inf(u.matrix()); }

double gen_energy(const StatePoint& w) {
  int d = w.dim();
  SymMatrix m = outer(w.v, w.v) - w.u.matrix();
  return 0.5 * d * lambda_max(m);
}

StatePoint lift_point(const Vec& xi) { return StatePoint(xi, ocircle(xi)); }

double sphere_gauge(const StatePoint& w) { return w.v.norm2() / w.dim() + op_norm_inf(w.u); }

SpherePoint::SpherePoint(StatePoint p) : p_(std::move(p)) {
  witness_ = sphere_gauge(p_);
  if (std::abs(witness_ - 1.0) > tol().sphere) throw InputError("point is not on the state sphere");
}

std::pair<double, SpherePoint> sphere_split(const StatePoint& w) {
  double g = sphere_gauge(w);
  if (!(g > 0.0)) throw InputError("sphere_split of the zero state");
  double s = std::sqrt(g);
  StatePoint z = (1.0 / s) * StatePoint(w.v, (1.0 / s) * w.u);
  return {s, SpherePoint(z)};
}

StatePoint sphere_scale(const SpherePoint& z, double s) {
  return StatePoint(s * z.base().v, (s * s) * z.base().u);
}

}  // namespace ymgen
