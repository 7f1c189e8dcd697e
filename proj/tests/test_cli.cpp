#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "ymgen/commands.hpp"

using namespace ymgen;
namespace fs = std::filesystem;

namespace {

const char* kTwoAtom = R"({"d": 2, "T": 1.0, "lattice_k": 1, "cells": "homogeneous",
  "cell": {"atoms": [{"w": 0.5, "v": [1, 0], "u_upper": [0.5, 0]},
                     {"w": 0.5, "v": [-1, 0], "u_upper": [-0.5, 0]}]}})";

const char* kThreeAtom = R"({"d": 2, "T": 1.0, "lattice_k": 1, "cells": "homogeneous",
  "cell": {"atoms": [{"w": 0.25, "v": [1, 0], "u_upper": [0.5, 0]},
                     {"w": 0.25, "v": [-1, 0], "u_upper": [0.5, 0]},
                     {"w": 0.5, "v": [0, 0], "u_upper": [-0.5, 0]}]}})";

const char* kZero = R"({"d": 2, "T": 1.0, "lattice_k": 1, "cells": "homogeneous",
  "cell": {"atoms": [{"w": 1.0, "v": [0, 0], "u_upper": [0, 0]}]}})";

const char* kConcentrated = R"({"d": 2, "T": 1.0, "lattice_k": 1, "cells": "homogeneous",
  "cell": {"atoms": [{"w": 1.0, "v": [0, 0], "u_upper": [0, 0]}], "alpha": 1.0,
           "angle_atoms": [{"w": 0.5, "v": [1.4142135623730951, 0], "u_upper": [0, 0]},
                           {"w": 0.5, "v": [-1.4142135623730951, 0], "u_upper": [0, 0]}]}})";

struct Sandbox {
  fs::path dir;
  explicit Sandbox(const std::string& name) : dir(fs::temp_directory_path() / ("ymgen_cli_" + name)) {
    fs::remove_all(dir);
    fs::create_directories(dir);
  }
  ~Sandbox() { fs::remove_all(dir); }

  std::string config(const std::string& measure, const std::string& extra = "",
                     const std::string& synthesis = "{\"delta\": 1.0}") const {
    fs::path p = dir / "config.json";
    std::ofstream(p) << "{\"measure\": " << measure << ", \"grid\": [64, 64], \"synthesis\": " << synthesis
                     << extra << "}";
    return p.string();
  }
  std::string out() const { return (dir / "out").string(); }
};

int run(std::vector<std::string> args) {
  args.insert(args.begin(), "ymgen");
  return run_cli(args);
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("cli: two-atom synthesize then verify passes") {
  Sandbox sb("two");
  std::string cfg = sb.config(kTwoAtom);
  REQUIRE(run({"synthesize", "--config", cfg, "--out", sb.out()}) == 0);
  CHECK(fs::exists(fs::path(sb.out()) / "field.bin"));
  CHECK(fs::exists(fs::path(sb.out()) / "synthesis.json"));
  CHECK(run({"verify", "--config", cfg, "--out", sb.out()}) == 0);
  CHECK(fs::exists(fs::path(sb.out()) / "verification.json"));
  CHECK(fs::exists(fs::path(sb.out()) / "energy.csv"));
}

TEST_CASE("cli: outputs are identical on rerun") {
  Sandbox sb("rerun");
  std::string cfg = sb.config(kThreeAtom);
  fs::path a = sb.dir / "a", b = sb.dir / "b";
  REQUIRE(run({"synthesize", "--config", cfg, "--out", a.string(), "--delta", "1.5", "--grid", "128,64"}) == 0);
  REQUIRE(run({"synthesize", "--config", cfg, "--out", b.string(), "--delta", "1.5", "--grid", "128,64"}) == 0);
  CHECK(slurp(a / "field.bin") == slurp(b / "field.bin"));
  CHECK(slurp(a / "synthesis.json") == slurp(b / "synthesis.json"));
}

TEST_CASE("cli: a single zero atom gives the zero field, which verifies") {
  Sandbox sb("zero");
  std::string cfg = sb.config(kZero);
  REQUIRE(run({"synthesize", "--config", cfg, "--out", sb.out(), "--grid", "16,16"}) == 0);
  GridField f = GridField::read((fs::path(sb.out()) / "field.bin").string());
  for (double x : f.data()) CHECK(x == 0.0);
  CHECK(run({"verify", "--config", cfg, "--out", sb.out(), "--grid", "16,16"}) == 0);
}

TEST_CASE("cli: a corrupted stress channel fails verification") {
  Sandbox sb("corrupt");
  std::string cfg = sb.config(kTwoAtom);
  REQUIRE(run({"synthesize", "--config", cfg, "--out", sb.out()}) == 0);
  fs::path fp = fs::path(sb.out()) / "field.bin";
  GridField f = GridField::read(fp.string());
  for (size_t p = 0; p < f.points(); p += 7) f.raw(p)[2] += 0.3;  // first stored entry of u
  f.write(fp.string());
  CHECK(run({"verify", "--config", cfg, "--out", sb.out()}) == 3);
}

TEST_CASE("cli: provenance mismatch needs --force") {
  Sandbox sb("hash");
  std::string two = sb.config(kTwoAtom);
  REQUIRE(run({"synthesize", "--config", two, "--out", sb.out()}) == 0);
  std::string three = sb.config(kThreeAtom);
  CHECK(run({"verify", "--config", three, "--out", sb.out()}) == 1);
  int forced = run({"verify", "--config", three, "--out", sb.out(), "--force"});
  CHECK(forced == 3);
  std::ifstream in(fs::path(sb.out()) / "verification.json");
  nlohmann::json j = nlohmann::json::parse(in);
  CHECK(j.at("forced") == true);
}

TEST_CASE("cli: input errors") {
  Sandbox sb("input");
  CHECK(run({"synthesize", "--config", sb.config(kConcentrated), "--out", sb.out()}) == 1);
  CHECK(run({"synthesize", "--config", sb.config(kTwoAtom), "--out", sb.out(), "--grid", "60,64"}) == 1);
  CHECK(run({"synthesize", "--config", sb.config(kTwoAtom, ", \"colour\": 3"), "--out", sb.out()}) == 1);
  CHECK(run({"synthesize", "--config", (sb.dir / "missing.json").string()}) == 1);
  CHECK(run({"frobnicate"}) == 1);
  CHECK(run({"synthesize"}) == 1);
}

TEST_CASE("cli: concentration is accepted with an oscillation index") {
  Sandbox sb("embed");
  std::string cfg = sb.config(kConcentrated, ", \"embed_m\": 2.0");
  CHECK(run({"synthesize", "--config", cfg, "--out", sb.out()}) == 0);
  CHECK(run({"verify", "--config", cfg, "--out", sb.out()}) == 0);
}

TEST_CASE("cli: infeasible parameters") {
  Sandbox sb("infeasible");
  std::string cfg = sb.config(kTwoAtom, "", "{\"delta\": 40.0, \"time_compact\": true}");
  CHECK(run({"synthesize", "--config", cfg, "--out", sb.out(), "--grid", "16,16"}) == 2);
  CHECK_FALSE(fs::exists(fs::path(sb.out()) / "field.bin"));
}

TEST_CASE("cli: pipeline and study write their tables") {
  Sandbox sb("tables");
  std::string cfg = sb.config(kTwoAtom, ", \"study\": {\"ks\": [4, 8]}");
  CHECK(run({"pipeline", "--config", cfg, "--out", sb.out()}) == 0);
  CHECK(fs::exists(fs::path(sb.out()) / "pipeline.json"));
  CHECK(fs::exists(fs::path(sb.out()) / "stages.csv"));
  CHECK(run({"study", "--config", cfg, "--out", sb.out()}) == 0);
  std::string csv = slurp(fs::path(sb.out()) / "study.csv");
  int lines = 0;
  for (char ch : csv) lines += ch == '\n';
  CHECK(lines == 3);
}
