#pragma once

#include <array>
#include <cmath>
#include <span>
#include <utility>

#include "ymgen/config.hpp"

namespace ymgen {

class Vec {
 public:
  Vec() = default;
  explicit Vec(int d);
  Vec(std::initializer_list<double> xs);
  static Vec unit(int d, int i);

  int dim() const { return d_; }
  double& operator[](int i) { return c_[i]; }
  double operator[](int i) const { return c_[i]; }

  double norm2() const;
  double norm() const { return std::sqrt(norm2()); }
  double dot(const Vec& o) const;

  Vec& operator+=(const Vec& o);
  Vec& operator-=(const Vec& o);
  Vec& operator*=(double s);

 private:
  int d_ = 0;
  std::array<double, kMaxDim + 1> c_{};
};

Vec operator+(Vec a, const Vec& b);
Vec operator-(Vec a, const Vec& b);
Vec operator-(Vec a);
Vec operator*(double s, Vec a);

// Dense symmetric matrix of size n <= 4, full storage.
class SymMatrix {
 public:
  SymMatrix() = default;
  explicit SymMatrix(int n);
  static SymMatrix identity(int n);

  int size() const { return n_; }
  double& operator()(int i, int j) { return a_[i * 4 + j]; }
  double operator()(int i, int j) const { return a_[i * 4 + j]; }

  bool is_symmetric(double tol) const;
  double trace() const;
  double frobenius() const;
  Vec apply(const Vec& x) const;

  SymMatrix& operator+=(const SymMatrix& o);
  SymMatrix& operator-=(const SymMatrix& o);
  SymMatrix& operator*=(double s);

 private:
  int n_ = 0;
  std::array<double, 16> a_{};
};

SymMatrix operator+(SymMatrix a, const SymMatrix& b);
SymMatrix operator-(SymMatrix a, const SymMatrix& b);
SymMatrix operator*(double s, SymMatrix a);
SymMatrix outer(const Vec& a, const Vec& b);  // symmetrized: (ab' + ba')/2

struct EigenSystem {
  std::array<double, 4> values{};  // ascending
  std::array<Vec, 4> vectors{};    // orthonormal, vectors[k] belongs to values[k]
  int n = 0;
};

EigenSystem eigen_sym(const SymMatrix& a);

// Traceless symmetric d x d matrix. The last diagonal entry is not stored.
class TracelessSym {
 public:
  static constexpr int kMaxFree = 5;

  TracelessSym() = default;
  explicit TracelessSym(int d);
  static TracelessSym from_free(int d, std::span<const double> free);
  static TracelessSym from_matrix(const SymMatrix& m);  // throws unless symmetric and traceless

  static int free_count(int d) { return d * (d + 1) / 2 - 1; }

  int dim() const { return d_; }
  int free_count() const { return free_count(d_); }
  std::span<const double> free() const { return {f_.data(), static_cast<size_t>(free_count())}; }
  double& free_at(int k) { return f_[k]; }
  double free_at(int k) const { return f_[k]; }

  double operator()(int i, int j) const;
  SymMatrix matrix() const;
  double frobenius2() const;
  double frobenius() const { return std::sqrt(frobenius2()); }
  double contract(const TracelessSym& o) const;  // B:u

  TracelessSym& operator+=(const TracelessSym& o);
  TracelessSym& operator-=(const TracelessSym& o);
  TracelessSym& operator*=(double s);

 private:
  int d_ = 0;
  std::array<double, kMaxFree> f_{};
};

TracelessSym operator+(TracelessSym a, const TracelessSym& b);
TracelessSym operator-(TracelessSym a, const TracelessSym& b);
TracelessSym operator-(TracelessSym a);
TracelessSym operator*(double s, TracelessSym a);

struct StatePoint {
  Vec v;
  TracelessSym u;

  StatePoint() = default;
  explicit StatePoint(int d) : v(d), u(d) {}
  StatePoint(Vec v_, TracelessSym u_);

  int dim() const { return v.dim(); }
  double norm2() const { return v.norm2() + u.frobenius2(); }
  double norm() const { return std::sqrt(norm2()); }
  bool is_zero() const { return norm2() == 0.0; }

  StatePoint& operator+=(const StatePoint& o);
  StatePoint& operator-=(const StatePoint& o);
  StatePoint& operator*=(double s);
};

StatePoint operator+(StatePoint a, const StatePoint& b);
StatePoint operator-(StatePoint a, const StatePoint& b);
StatePoint operator-(StatePoint a);
StatePoint operator*(double s, StatePoint a);

// Point with |v|^2/d + |u|_inf = 1.
class SpherePoint {
 public:
  SpherePoint() = default;
  explicit SpherePoint(StatePoint p);  // throws if not normalized

  const StatePoint& base() const { return p_; }
  double witness() const { return witness_; }

 private:
  StatePoint p_;
  double witness_ = 0.0;
};

TracelessSym ocircle(const Vec& v);
double lambda_max(const SymMatrix& a);
double op_norm_inf(const SymMatrix& a);
double op_norm_inf(const TracelessSym& u);
double gen_energy(const StatePoint& w);
StatePoint lift_point(const Vec& xi);
double sphere_gauge(const StatePoint& w);  // |v|^2/d + |u|_inf
std::pair<double, SpherePoint> sphere_split(const StatePoint& w);
StatePoint sphere_scale(const SpherePoint& z, double s);  // (s v, s^2 u)

void check_dim(int d);

}  // namespace ymgen
