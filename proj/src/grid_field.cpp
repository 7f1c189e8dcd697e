#include "ymgen/grid_field.hpp"

#include <bit>
#include <cstring>
#include <fstream>

namespace ymgen {

std::string to_string(Stencil s) { return s == Stencil::Spectral ? "spectral" : "forward"; }

Stencil stencil_from_string(const std::string& s) {
  if (s == "spectral") return Stencil::Spectral;
  if (s == "forward") return Stencil::Forward;
  throw InputError("unknown stencil '" + s + "'");
}

size_t Grid::spatial_points() const {
  size_t n = 1;
  for (int a = 0; a < d; ++a) n *= nx;
  return n;
}

size_t Grid::points() const { return spatial_points() * nt; }

double Grid::cell_volume() const {
  double v = T / nt;
  for (int a = 0; a < d; ++a) v /= nx;
  return v;
}

size_t Grid::index(const std::array<int, kMaxDim + 1>& i) const {
  size_t p = i[d];
  for (int a = d - 1; a >= 0; --a) p = p * nx + i[a];
  return p;
}

std::array<int, kMaxDim + 1> Grid::coords(size_t p) const {
  std::array<int, kMaxDim + 1> i{};
  for (int a = 0; a < d; ++a) {
    i[a] = static_cast<int>(p % nx);
    p /= nx;
  }
  i[d] = static_cast<int>(p);
  return i;
}

void Grid::validate() const {
  check_dim(d);
  if (nx < 4 || nt < 4) throw InputError("grid needs at least 4 points per axis");
  if (!std::has_single_bit(static_cast<unsigned>(nx)) || !std::has_single_bit(static_cast<unsigned>(nt)))
    throw InputError("grid dimensions must be powers of two");
  if (!(T > 0.0)) throw InputError("time horizon must be positive");
}

GridField::GridField(const Grid& g, Stencil s)
    : grid_(g), stencil_(s), channels_(g.d + TracelessSym::free_count(g.d) + 1) {
  g.validate();
  data_.assign(g.points() * channels_, 0.0);
}

void GridField::set_orientation(const std::array<int, kMaxDim + 1>& o) {
  for (int a = 0; a <= kMaxDim; ++a)
    if (o[a] != 1 && o[a] != -1) throw InputError("orientation entries must be +1 or -1");
  orientation_ = o;
}

StatePoint GridField::state(size_t p) const {
  const int d = grid_.d;
  const double* x = raw(p);
  StatePoint w(d);
  for (int i = 0; i < d; ++i) w.v[i] = x[i];
  for (int k = 0; k < w.u.free_count(); ++k) w.u.free_at(k) = x[d + k];
  return w;
}

void GridField::set(size_t p, const StatePoint& w, double q) {
  const int d = grid_.d;
  double* x = raw(p);
  for (int i = 0; i < d; ++i) x[i] = w.v[i];
  for (int k = 0; k < w.u.free_count(); ++k) x[d + k] = w.u.free_at(k);
  x[channels_ - 1] = q;
}

void GridField::add(size_t p, const StatePoint& w, double q) {
  const int d = grid_.d;
  double* x = raw(p);
  for (int i = 0; i < d; ++i) x[i] += w.v[i];
  for (int k = 0; k < w.u.free_count(); ++k) x[d + k] += w.u.free_at(k);
  x[channels_ - 1] += q;
}

SymMatrix GridField::lifted(size_t p) const {
  const int d = grid_.d;
  StatePoint w = state(p);
  double q = pressure(p);
  SymMatrix U(d + 1);
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) U(i, j) = w.u(i, j) + (i == j ? q : 0.0);
    U(i, d) = U(d, i) = w.v[i];
  }
  return U;
}

void GridField::add_lifted(size_t p, const SymMatrix& U) {
  const int d = grid_.d;
  double* x = raw(p);
  double q = 0.0;
  for (int i = 0; i < d; ++i) q += U(i, i);
  q /= d;
  for (int i = 0; i < d; ++i) x[i] += U(i, d);
  int k = 0;
  for (int i = 0; i < d; ++i)
    for (int j = i; j < d; ++j) {
      if (i == d - 1 && j == d - 1) continue;
      x[d + k++] += U(i, j) - (i == j ? q : 0.0);
    }
  x[channels_ - 1] += q;
}

void GridField::write(const std::string& path) const {
  static_assert(std::endian::native == std::endian::little, "little-endian host required");
  nlohmann::json h;
  h["format"] = "ymgen-gridfield";
  h["version"] = 1;
  h["d"] = grid_.d;
  h["grid"] = {grid_.nx, grid_.nt};
  h["T"] = grid_.T;
  h["stencil"] = to_string(stencil_);
  h["orientation"] = std::vector<int>(orientation_.begin(), orientation_.begin() + grid_.axes());
  h["layout"] = "row-major [t][x_{d-1}]...[x_0][channel], float64 little-endian";
  nlohmann::json ch = nlohmann::json::array();
  for (int i = 0; i < grid_.d; ++i) ch.push_back("v" + std::to_string(i));
  for (int k = 0; k < TracelessSym::free_count(grid_.d); ++k) ch.push_back("u" + std::to_string(k));
  ch.push_back("q");
  h["channels"] = ch;
  h["provenance"] = provenance_;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path);
  out << h.dump() << '\n';
  out.write(reinterpret_cast<const char*>(data_.data()), static_cast<std::streamsize>(data_.size() * sizeof(double)));
  if (!out) throw InputError("short write to " + path);
}

GridField GridField::read(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw InputError("empty field file " + path);
  nlohmann::json h;
  try {
    h = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw InputError("corrupt field header in " + path);
  }
  if (h.value("format", "") != "ymgen-gridfield") throw InputError("not a ymgen field file: " + path);
  Grid g;
  try {
    g.d = h.at("d").get<int>();
    g.nx = h.at("grid").at(0).get<int>();
    g.nt = h.at("grid").at(1).get<int>();
    g.T = h.at("T").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw InputError("corrupt field header in " + path);
  }
  GridField f(g, stencil_from_string(h.value("stencil", "forward")));
  f.provenance_ = h.value("provenance", nlohmann::json::object());
  if (h.contains("orientation")) {
    std::array<int, kMaxDim + 1> o{1, 1, 1, 1};
    try {
      for (int a = 0; a < g.axes(); ++a) o[a] = h.at("orientation").at(a).get<int>();
    } catch (const nlohmann::json::exception& e) {
      throw InputError("corrupt orientation in " + path);
    }
    f.set_orientation(o);
  }
  in.read(reinterpret_cast<char*>(f.data_.data()), static_cast<std::streamsize>(f.data_.size() * sizeof(double)));
  if (in.gcount() != static_cast<std::streamsize>(f.data_.size() * sizeof(double)))
    throw InputError("truncated field payload in " + path);
  if (in.peek() != std::char_traits<char>::eof()) throw InputError("trailing bytes in field file " + path);
  return f;
}

}  // namespace ymgen
