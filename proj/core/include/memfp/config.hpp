#pragma once

#include <iosfwd>
#include <string>

#include "memfp/fault_classifier.hpp"
#include "memfp/feature_pipeline.hpp"
#include "memfp/model.hpp"
#include "memfp/synthgen.hpp"

namespace memfp {

/// Everything a run needs; loaded from a single JSON config file with
/// CLI flag overrides on top. Unknown keys are rejected.
struct RunConfig {
  WindowConfig window;
  FaultThresholds thresholds;
  StormConfig storm;
  Hyperparams hyperparams;
  EnsembleMode mode = EnsembleMode::boosted;
  GeneratorConfig generator;
  std::string rules_path;          // empty = built-in default rule set
  Adjacency adjacency = Adjacency::FourNeighbor;
  double threshold = 0.3;
  double y_c = 0.1;
  double oversample_ratio = 0.3;
  std::uint64_t seed = 1;
  unsigned threads = 0;

  void validate() const;

  /// Stable hash over the canonical serialized form; embedded in every
  /// artifact file together with the seed.
  std::uint64_t hash() const;
  std::string meta_line() const;  // "seed=N config_hash=HEX"
};

RunConfig load_run_config(std::istream& in);
RunConfig load_run_config_file(const std::string& path);
void save_run_config(const RunConfig& cfg, std::ostream& out);

}  // namespace memfp
