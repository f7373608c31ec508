#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "memfp/util.hpp"

namespace memfp {

enum class EnsembleMode { boosted, forest };

struct Hyperparams {
  int n_trees = 200;
  int max_depth = 6;
  double learning_rate = 0.1;
  int min_samples_leaf = 20;
  double feature_subsample = 0.8;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Row-major training matrix with binary labels.
struct DataMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> x;  // rows * cols
  std::vector<int> y;     // 0/1
};

struct TreeNode {
  int feature = -1;        // -1 = leaf
  double threshold = 0;    // x[feature] <= threshold goes left
  int left = -1;
  int right = -1;
  double value = 0;        // leaf score (boosted: additive; forest: class fraction)
};

struct Tree {
  std::vector<TreeNode> nodes;  // nodes[0] is the root
  double leaf_value(std::span<const double> v) const;
};

class TreeEnsemble {
 public:
  TreeEnsemble() = default;

  EnsembleMode mode() const { return mode_; }
  const std::vector<Tree>& trees() const { return trees_; }
  double base_score() const { return base_score_; }
  std::uint64_t manifest_hash() const { return manifest_hash_; }
  std::size_t n_features() const { return n_features_; }
  const Hyperparams& hyperparams() const { return hp_; }
  const std::vector<double>& feature_gain() const { return feature_gain_; }

  /// Probability in [0, 1]; throws on a vector of the wrong arity.
  double predict_proba(std::span<const double> v) const;

  void check_manifest(std::uint64_t hash) const {
    if (hash != manifest_hash_) throw ConfigError("feature manifest hash mismatch");
  }

  friend TreeEnsemble train(const DataMatrix&, const std::vector<std::string>&,
                            const Hyperparams&, EnsembleMode);
  friend void save_model(const TreeEnsemble&, std::ostream&, const std::string&);
  friend TreeEnsemble load_model(std::istream&);

 private:
  EnsembleMode mode_ = EnsembleMode::boosted;
  std::vector<Tree> trees_;
  double base_score_ = 0;
  std::uint64_t manifest_hash_ = 0;
  std::size_t n_features_ = 0;
  Hyperparams hp_;
  std::vector<double> feature_gain_;
};

/// Deterministic given the seed; split-gain ties break toward the lowest
/// feature index, then the lowest threshold.
TreeEnsemble train(const DataMatrix& data, const std::vector<std::string>& feature_names,
                   const Hyperparams& hp, EnsembleMode mode = EnsembleMode::boosted);

double predict_proba(const TreeEnsemble& model, std::span<const double> v);

/// Positive iff predict_proba >= threshold.
bool classify(const TreeEnsemble& model, std::span<const double> v, double threshold = 0.3);

/// Versioned line-record text format; round-trips bit-exactly.
void save_model(const TreeEnsemble& model, std::ostream& out, const std::string& meta = "");
void save_model_file(const TreeEnsemble& model, const std::string& path,
                     const std::string& meta = "");
TreeEnsemble load_model(std::istream& in);
TreeEnsemble load_model_file(const std::string& path);

}  // namespace memfp
