#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "ymgen/approximation.hpp"
#include "ymgen/verification.hpp"
#include "ymgen/waves.hpp"

namespace ymgen {

// Everything a subcommand needs, read from --config and overridden by flags.
struct RunConfig {
  std::string command;
  nlohmann::json measure;  // generalized Young measure as JSON
  std::string field_path;  // verify input, default <out>/field.bin
  std::string out = ".";
  Grid grid;
  SynthesisParams synthesis;
  VerifyParams verify;
  PipelineParams pipeline;
  std::vector<int> ks;     // study schedule
  bool force = false;
  bool auto_shift = false;
  double embed_m = 0.0;    // oscillation index for a concentration part, 0 rejects one

  void validate() const;
};

RunConfig load_config(const std::string& path);

// Homogeneous discrete target of a config, with concentration embedded and
// (optionally) the barycentre removed.
DiscreteMeasure synthesis_target(const RunConfig& c, double& T);

int cmd_synthesize(const RunConfig& c);
int cmd_verify(const RunConfig& c);
int cmd_pipeline(const RunConfig& c);
int cmd_study(const RunConfig& c);

// Exit codes: 0 pass, 1 input error, 2 infeasible parameters, 3 verification failure.
int run_cli(const std::vector<std::string>& args);

}  // namespace ymgen
