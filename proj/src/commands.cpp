#include "ymgen/commands.hpp"

#include <cmath>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "ymgen/json_io.hpp"

namespace ymgen {

namespace fs = std::filesystem;

namespace {

bool power_of_two(int n) { return n >= 4 && (n & (n - 1)) == 0; }

void read_synthesis(const json& j, SynthesisParams& p) {
  p.k = j.value("k", p.k);
  p.delta = j.value("delta", p.delta);
  p.eps = j.value("eps", p.eps);
  p.time_compact = j.value("time_compact", p.time_compact);
  p.seed = j.value("seed", p.seed);
  p.max_entry = j.value("max_entry", p.max_entry);
  p.strict = j.value("strict", p.strict);
}

void read_verify(const json& j, VerifyParams& p) {
  p.eps = j.value("eps", p.eps);
  p.residual_threshold = j.value("residual_threshold", p.residual_threshold);
  p.tol_state = j.value("tol_state", p.tol_state);
  p.check_fractions = j.value("check_fractions", p.check_fractions);
}

void read_pipeline(const json& j, PipelineParams& p) {
  p.m = j.value("m", p.m);
  p.rho = j.value("rho", p.rho);
  p.eps = j.value("eps", p.eps);
  p.l = j.value("l", p.l);
  p.mollify_k = j.value("mollify_k", p.mollify_k);
  p.quant_h = j.value("quant_h", p.quant_h);
}

json verify_json(const VerifyParams& p) {
  return {{"eps", p.eps},
          {"residual_threshold", p.residual_threshold},
          {"tol_state", p.tol_state},
          {"check_fractions", p.check_fractions}};
}

void parse_grid(const std::string& s, Grid& g) {
  int nx = 0, nt = 0;
  char comma = 0;
  std::istringstream is(s);
  if (!(is >> nx >> comma >> nt) || comma != ',' || !is.eof()) throw InputError("--grid expects NX,NT");
  g.nx = nx;
  g.nt = nt;
}

std::string out_path(const RunConfig& c, const std::string& name) { return (fs::path(c.out) / name).string(); }

void ensure_out(const RunConfig& c) {
  std::error_code ec;
  fs::create_directories(c.out, ec);
  if (ec) throw InputError("cannot create output directory " + c.out);
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

}  // namespace

void RunConfig::validate() const {
  if (measure.is_null()) throw InputError("config has no measure");
  if (!power_of_two(grid.nx) || !power_of_two(grid.nt)) throw InputError("grid dimensions must be powers of two >= 4");
  synthesis.validate();
  if (!(verify.eps > 0.0) || !(verify.residual_threshold > 0.0) || verify.tol_state < 0.0)
    throw InputError("verify parameters must be positive");
  if (embed_m < 0.0) throw InputError("embed_m must be nonnegative");
  for (int k : ks)
    if (k <= 0) throw InputError("study schedule entries must be positive");
}

RunConfig load_config(const std::string& path) {
  json j = read_json_file(path);
  if (!j.is_object()) throw InputError("config must be a JSON object");
  static const std::vector<std::string> known = {"measure", "field",  "out",        "grid",    "synthesis",
                                                 "verify",  "pipeline", "study",    "auto_shift", "embed_m"};
  for (const auto& [key, value] : j.items())
    if (std::find(known.begin(), known.end(), key) == known.end()) throw InputError("unknown config key: " + key);

  RunConfig c;
  const fs::path base = fs::path(path).parent_path();
  try {
    if (j.contains("measure")) {
      const json& m = j.at("measure");
      c.measure = m.is_string() ? read_json_file((base / m.get<std::string>()).string()) : m;
    }
    if (j.contains("field")) c.field_path = (base / j.at("field").get<std::string>()).string();
    if (j.contains("out")) c.out = j.at("out").get<std::string>();
    if (j.contains("grid")) {
      c.grid.nx = j.at("grid").at(0).get<int>();
      c.grid.nt = j.at("grid").at(1).get<int>();
    }
    if (j.contains("synthesis")) read_synthesis(j.at("synthesis"), c.synthesis);
    if (j.contains("verify")) read_verify(j.at("verify"), c.verify);
    if (j.contains("pipeline")) read_pipeline(j.at("pipeline"), c.pipeline);
    if (j.contains("study")) c.ks = j.at("study").value("ks", std::vector<int>{});
    c.auto_shift = j.value("auto_shift", false);
    c.embed_m = j.value("embed_m", 0.0);
  } catch (const json::exception& e) {
    throw InputError(std::string("malformed config: ") + e.what());
  }
  return c;
}

DiscreteMeasure synthesis_target(const RunConfig& c, double& T) {
  GeneralizedYM ym = ym_from_json(c.measure);
  T = ym.horizon();
  const json cells = to_json(ym).at("cells");
  for (const json& x : cells)
    if (x != cells.at(0))
      throw InputError("synthesis needs a homogeneous measure; reduce it with the pipeline command first");
  const Cell& cell = ym.cell(0);
  DiscreteMeasure nu = cell.osc;
  if (cell.conc.active()) {
    if (!(c.embed_m > 0.0)) throw InputError("measure has a concentration part: set embed_m to embed it");
    nu = oscillation_embed(nu, cell.conc, c.embed_m);
  }
  double scale = 1.0;
  for (const Atom& a : nu.atoms()) scale = std::max(scale, a.point.norm());
  StatePoint b = nu.barycentre();
  if (b.norm() > 1e-10 * scale) {
    if (!c.auto_shift) throw InputError("measure barycentre is not zero (set auto_shift to re-centre)");
    nu = nu.translated(-b);
  }
  return nu;
}

int cmd_synthesize(const RunConfig& c) {
  c.validate();
  double T = 1.0;
  DiscreteMeasure nu = synthesis_target(c, T);
  Grid g{nu.dim(), c.grid.nx, c.grid.nt, T};
  Synthesis s = n_atom_field(nu, g, c.synthesis);
  s.field.provenance() = {{"measure_hash", content_hash(c.measure)},
                          {"synthesis", c.synthesis.to_json()},
                          {"grid", {c.grid.nx, c.grid.nt}}};
  ensure_out(c);
  s.field.write(out_path(c, "field.bin"));
  json rep = s.report.to_json();
  rep["provenance"] = s.field.provenance();
  write_text_file(out_path(c, "synthesis.json"), dump(rep));
  std::cout << "wrote " << out_path(c, "field.bin") << " (" << nu.size() << " atoms, grid " << g.nx << "^" << g.d
            << "x" << g.nt << ", sup " << s.report.sup_norm << ")\n";
  return 0;
}

int cmd_verify(const RunConfig& c) {
  c.validate();
  const std::string path = c.field_path.empty() ? out_path(c, "field.bin") : c.field_path;
  GridField f = GridField::read(path);
  const std::string want = content_hash(c.measure);
  const std::string have = f.provenance().value("measure_hash", std::string());
  if (have != want && !c.force)
    throw InputError("field " + path + " was synthesized for a different measure (hash " + have + ", expected " +
                     want + "); use --force to verify anyway");
  double T = 1.0;
  DiscreteMeasure nu = synthesis_target(c, T);
  if (nu.dim() != f.grid().d || std::abs(T - f.grid().T) > 1e-12)
    throw InputError("field domain does not match the measure");
  TestBank bank(nu.dim());
  VerificationReport r = verify_field(f, nu, bank, c.verify);
  json j = r.to_json();
  j["params"] = verify_json(c.verify);
  j["field_provenance"] = f.provenance();
  j["forced"] = have != want;
  ensure_out(c);
  write_text_file(out_path(c, "verification.json"), dump(j));
  write_text_file(out_path(c, "energy.csv"), r.energy_csv(T));
  for (const Criterion& cr : r.criteria)
    std::cout << (cr.pass ? "PASS " : "FAIL ") << cr.name << " " << cr.value << " (threshold " << cr.threshold
              << ")\n";
  return r.pass() ? 0 : 3;
}

int cmd_pipeline(const RunConfig& c) {
  if (c.measure.is_null()) throw InputError("config has no measure");
  GeneralizedYM ym = ym_from_json(c.measure);
  PipelineResult res = reduce_to_discrete(ym, c.pipeline);
  json j;
  json st = json::array();
  std::ostringstream csv;
  csv << "stage,distance,max_slab_energy,atoms,lattice\n";
  csv.precision(17);
  for (const StageReport& s : res.stages) {
    st.push_back({{"stage", s.stage},
                  {"distance", s.distance},
                  {"max_slab_energy", s.max_slab_energy},
                  {"atoms", s.atoms},
                  {"lattice", s.lattice}});
    csv << s.stage << "," << s.distance << "," << s.max_slab_energy << "," << s.atoms << "," << s.lattice << "\n";
  }
  j["stages"] = st;
  j["target_esssup_energy"] = res.target_esssup_energy;
  j["energy_input"] = pair(ym, tf_energy());
  j["energy_output"] = pair(res.reconstructed, tf_energy());
  j["discrete"] = to_json(res.discrete);
  json field = json::array();
  for (const StatePoint& w : res.field) field.push_back(to_json(w));
  j["field"] = field;
  j["measure_hash"] = content_hash(c.measure);
  ensure_out(c);
  write_text_file(out_path(c, "pipeline.json"), dump(j));
  write_text_file(out_path(c, "stages.csv"), csv.str());
  for (const StageReport& s : res.stages)
    std::cout << s.stage << " distance " << s.distance << " max_slab_energy " << s.max_slab_energy << "\n";
  return 0;
}

int cmd_study(const RunConfig& c) {
  c.validate();
  double T = 1.0;
  DiscreteMeasure nu = synthesis_target(c, T);
  Grid g{nu.dim(), c.grid.nx, c.grid.nt, T};
  std::vector<int> ks = c.ks;
  if (ks.empty()) {
    const int k0 = c.synthesis.k > 0 ? c.synthesis.k : 4;
    for (int i = 0; i < 5; ++i) ks.push_back(k0 << i);
  }
  TestBank bank(nu.dim());
  auto make = [&](int k) {
    SynthesisParams p = c.synthesis;
    p.k = k;
    return n_atom_field(nu, g, p).field;
  };
  GenerationStudy study = generation_report(ks, make, nu, bank, c.verify);
  ensure_out(c);
  write_text_file(out_path(c, "study.csv"), study.csv());
  for (const GenerationRow& r : study.rows)
    std::cout << "k " << r.k << " pairing_distance " << r.report.pairing_distance << "\n";
  std::cout << (study.monotone ? "pairing distance decreasing in k\n" : "pairing distance not monotone in k\n");
  return 0;
}

int run_cli(const std::vector<std::string>& args) {
  CLI::App app{"Young-measure subsolution generator"};
  app.require_subcommand(1);
  std::string config, out, grid, field;
  std::optional<int> k, seed;
  std::optional<double> delta, eps;
  bool force = false;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config, "JSON run configuration")->required();
    sub->add_option("--out", out, "output directory");
    sub->add_option("--grid", grid, "grid points NX,NT");
    sub->add_option("--k", k, "leaf frequency");
    sub->add_option("--delta", delta, "cutoff ramp width in wavelengths");
    sub->add_option("--eps", eps, "target accuracy");
    sub->add_option("--seed", seed, "seed for degenerate-span perturbations");
    sub->add_flag("--force", force, "verify even if the field provenance does not match");
  };
  CLI::App* syn = app.add_subcommand("synthesize", "write a subsolution field for a homogeneous measure");
  CLI::App* ver = app.add_subcommand("verify", "check a field against its target measure");
  CLI::App* pipe = app.add_subcommand("pipeline", "reduce a generalized Young measure to discrete cells");
  CLI::App* stu = app.add_subcommand("study", "convergence table over a k schedule");
  for (CLI::App* s : {syn, ver, pipe, stu}) add_common(s);
  ver->add_option("--field", field, "field file, default <out>/field.bin");

  std::vector<const char*> argv;
  for (const std::string& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    RunConfig c = load_config(config);
    c.command = app.get_subcommands().front()->get_name();
    if (!out.empty()) c.out = out;
    if (!grid.empty()) parse_grid(grid, c.grid);
    if (!field.empty()) c.field_path = field;
    if (k) c.synthesis.k = *k;
    if (delta) c.synthesis.delta = *delta;
    if (eps) {
      c.synthesis.eps = *eps;
      c.verify.eps = *eps;
    }
    if (seed) {
      if (*seed < 0) throw InputError("--seed must be nonnegative");
      c.synthesis.seed = static_cast<unsigned>(*seed);
    }
    c.force = force;
    if (c.command == "synthesize") return cmd_synthesize(c);
    if (c.command == "verify") return cmd_verify(c);
    if (c.command == "pipeline") return cmd_pipeline(c);
    return cmd_study(c);
  } catch (const InfeasibleError& e) {
    std::cerr << "ymgen: infeasible: " << e.what() << "\n";
    return 2;
  } catch (const VerificationError& e) {
    std::cerr << "ymgen: verification failed: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "ymgen: error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace ymgen
