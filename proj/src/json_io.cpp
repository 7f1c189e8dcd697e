#include "ymgen/json_io.hpp"

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace ymgen {

namespace {

std::vector<double> numbers(const json& j, const char* what) {
  if (!j.is_array()) throw InputError(std::string(what) + " must be an array");
  std::vector<double> out;
  for (const json& x : j) {
    if (!x.is_number()) throw InputError(std::string(what) + " must contain numbers");
    out.push_back(x.get<double>());
  }
  return out;
}

const json& field(const json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) throw InputError(std::string("missing field '") + key + "'");
  return j.at(key);
}

Cell cell_from_json(const json& c, int d) {
  Cell cell{measure_from_json(field(c, "atoms"), d), {}};
  if (c.contains("alpha")) cell.conc.alpha = c.at("alpha").get<double>();
  if (c.contains("angle_atoms")) {
    for (const json& a : c.at("angle_atoms")) {
      StatePoint p = state_from_json(a, d);
      double g = sphere_gauge(p);
      if (std::abs(g - 1.0) > 1e-9) throw InputError("angle atom is not on the state sphere");
      p = (1.0 / std::sqrt(g)) * StatePoint(p.v, (1.0 / std::sqrt(g)) * p.u);
      cell.conc.angle_atoms.push_back({field(a, "w").get<double>(), SpherePoint(p)});
    }
  }
  cell.conc.validate(d);
  return cell;
}

json cell_to_json(const Cell& c) {
  json j;
  j["atoms"] = to_json(c.osc);
  j["alpha"] = c.conc.alpha;
  json angles = json::array();
  for (const AngleAtom& a : c.conc.angle_atoms) {
    json x = to_json(a.point.base());
    x["w"] = a.weight;
    angles.push_back(x);
  }
  j["angle_atoms"] = angles;
  return j;
}

}  // namespace

json to_json(const StatePoint& w) {
  json v = json::array(), u = json::array();
  for (int i = 0; i < w.dim(); ++i) v.push_back(w.v[i]);
  for (double x : w.u.free()) u.push_back(x);
  return {{"v", v}, {"u_upper", u}};
}

StatePoint state_from_json(const json& j, int d) {
  check_dim(d);
  std::vector<double> v = numbers(field(j, "v"), "v");
  if (static_cast<int>(v.size()) != d) throw InputError("v must have " + std::to_string(d) + " entries");
  Vec vv(d);
  for (int i = 0; i < d; ++i) vv[i] = v[i];
  TracelessSym u(d);
  if (j.contains("u_upper")) u = TracelessSym::from_free(d, numbers(j.at("u_upper"), "u_upper"));
  return StatePoint(vv, u);
}

json to_json(const DiscreteMeasure& m) {
  json a = json::array();
  for (const Atom& x : m.atoms()) {
    json j = to_json(x.point);
    j["w"] = x.weight;
    a.push_back(j);
  }
  return a;
}

DiscreteMeasure measure_from_json(const json& atoms, int d) {
  if (!atoms.is_array() || atoms.empty()) throw InputError("atoms must be a non-empty array");
  std::vector<Atom> out;
  for (const json& a : atoms) out.push_back({field(a, "w").get<double>(), state_from_json(a, d)});
  return DiscreteMeasure(std::move(out));
}

json to_json(const GeneralizedYM& ym) {
  json j;
  j["d"] = ym.dim();
  j["T"] = ym.horizon();
  j["lattice_k"] = ym.lattice();
  json cells = json::array();
  for (const Cell& c : ym.cells()) cells.push_back(cell_to_json(c));
  j["cells"] = cells;
  return j;
}

GeneralizedYM ym_from_json(const json& j) {
  try {
    int d = field(j, "d").get<int>();
    check_dim(d);
    double T = j.value("T", 1.0);
    int k = j.value("lattice_k", 1);
    const json& cells = field(j, "cells");
    if (cells.is_string()) {
      if (cells.get<std::string>() != "homogeneous") throw InputError("cells must be an array or \"homogeneous\"");
      return GeneralizedYM::homogeneous(d, T, k, cell_from_json(field(j, "cell"), d));
    }
    if (!cells.is_array()) throw InputError("cells must be an array");
    std::vector<Cell> out;
    for (const json& c : cells) out.push_back(cell_from_json(c, d));
    return GeneralizedYM(d, T, k, std::move(out));
  } catch (const json::exception& e) {
    throw InputError(std::string("malformed measure JSON: ") + e.what());
  }
}

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw InputError("cannot parse " + path + ": " + e.what());
  }
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path);
  out << text;
}

std::string content_hash(const json& j) {
  std::string s = j.dump();
  uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace ymgen
