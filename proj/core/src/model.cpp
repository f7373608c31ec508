#include "memfp/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <random>
#include <sstream>

namespace memfp {

void Hyperparams::validate() const {
  if (n_trees <= 0 || max_depth <= 0 || min_samples_leaf <= 0)
    throw ConfigError("hyperparams: counts must be positive");
  if (learning_rate <= 0 || learning_rate > 1)
    throw ConfigError("hyperparams: learning_rate must be in (0, 1]");
  if (feature_subsample <= 0 || feature_subsample > 1)
    throw ConfigError("hyperparams: feature_subsample must be in (0, 1]");
}

double Tree::leaf_value(std::span<const double> v) const {
  int i = 0;
  while (nodes[i].feature >= 0)
    i = v[nodes[i].feature] <= nodes[i].threshold ? nodes[i].left : nodes[i].right;
  return nodes[i].value;
}

double TreeEnsemble::predict_proba(std::span<const double> v) const {
  if (v.size() != n_features_) throw ConfigError("predict: feature vector arity mismatch");
  double acc = 0;
  for (const auto& t : trees_) acc += t.leaf_value(v);
  if (mode_ == EnsembleMode::boosted) return 1.0 / (1.0 + std::exp(-(base_score_ + acc)));
  double p = trees_.empty() ? base_score_ : acc / static_cast<double>(trees_.size());
  return std::clamp(p, 0.0, 1.0);
}

double predict_proba(const TreeEnsemble& model, std::span<const double> v) {
  return model.predict_proba(v);
}

bool classify(const TreeEnsemble& model, std::span<const double> v, double threshold) {
  if (threshold < 0 || threshold > 1) throw ConfigError("classify: threshold must be in [0, 1]");
  return model.predict_proba(v) >= threshold;
}

namespace {

constexpr double kLambda = 1.0;
constexpr int kMaxBins = 256;

struct Binned {
  std::vector<std::vector<double>> edges;  // per feature, ascending upper bounds
  std::vector<std::uint8_t> idx;           // column-major: feature * rows + sample
};

Binned bin_features(const DataMatrix& d) {
  Binned b;
  b.edges.resize(d.cols);
  b.idx.resize(d.cols * d.rows);
  std::vector<double> col(d.rows);
  for (std::size_t f = 0; f < d.cols; ++f) {
    for (std::size_t i = 0; i < d.rows; ++i) col[i] = d.x[i * d.cols + f];
    std::vector<double> sorted = col;
    std::sort(sorted.begin(), sorted.end());
    sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
    auto& edges = b.edges[f];
    if (sorted.size() <= kMaxBins) {
      edges = sorted;
    } else {
      edges.reserve(kMaxBins);
      for (int k = 1; k <= kMaxBins; ++k) {
        std::size_t pos = k * sorted.size() / kMaxBins - 1;
        if (edges.empty() || sorted[pos] > edges.back()) edges.push_back(sorted[pos]);
      }
    }
    for (std::size_t i = 0; i < d.rows; ++i) {
      auto it = std::lower_bound(edges.begin(), edges.end(), col[i]);
      b.idx[f * d.rows + i] =
          static_cast<std::uint8_t>(std::min<std::size_t>(it - edges.begin(), edges.size() - 1));
    }
  }
  return b;
}

struct SplitInfo {
  double gain = 0;
  int feature = -1;
  int bin = -1;
  // left-side aggregates
  double gl = 0, hl = 0;
  std::size_t nl = 0;
};

struct TreeBuilder {
  const DataMatrix& d;
  const Binned& binned;
  const Hyperparams& hp;
  EnsembleMode mode;
  std::vector<std::size_t> features;  // active subset, ascending
  std::vector<std::size_t> order;     // sample ids, partitioned per node
  std::vector<double> grad, hess;     // forest: grad=y, hess=1
  std::vector<double>* gain_out;

  Tree tree;

  int build_node(std::size_t begin, std::size_t end, int depth, double g, double h) {
    const std::size_t n = end - begin;
    const int node_id = static_cast<int>(tree.nodes.size());
    tree.nodes.emplace_back();

    SplitInfo best;
    if (depth < hp.max_depth && n >= 2 * static_cast<std::size_t>(hp.min_samples_leaf)) {
      std::vector<double> hg(kMaxBins), hh(kMaxBins);
      std::vector<std::size_t> hc(kMaxBins);
      for (std::size_t f : features) {
        const auto& edges = binned.edges[f];
        const std::size_t bins = edges.size();
        if (bins < 2) continue;
        std::fill(hg.begin(), hg.begin() + bins, 0.0);
        std::fill(hh.begin(), hh.begin() + bins, 0.0);
        std::fill(hc.begin(), hc.begin() + bins, 0);
        const std::uint8_t* colbin = &binned.idx[f * d.rows];
        for (std::size_t k = begin; k < end; ++k) {
          const std::size_t i = order[k];
          const std::uint8_t bi = colbin[i];
          hg[bi] += grad[i];
          hh[bi] += hess[i];
          ++hc[bi];
        }
        double gl = 0, hl = 0;
        std::size_t nl = 0;
        for (std::size_t bi = 0; bi + 1 < bins; ++bi) {
          gl += hg[bi];
          hl += hh[bi];
          nl += hc[bi];
          const std::size_t nr = n - nl;
          if (nl < static_cast<std::size_t>(hp.min_samples_leaf) ||
              nr < static_cast<std::size_t>(hp.min_samples_leaf))
            continue;
          double gain;
          if (mode == EnsembleMode::boosted) {
            const double gr = g - gl, hr = h - hl;
            gain = 0.5 * (gl * gl / (hl + kLambda) + gr * gr / (hr + kLambda) -
                          g * g / (h + kLambda));
          } else {
            // variance reduction on the class fraction
            const double gr = g - gl;
            gain = gl * gl / static_cast<double>(nl) + gr * gr / static_cast<double>(nr) -
                   g * g / static_cast<double>(n);
          }
          if (gain > best.gain + 1e-12) {
            best = {gain, static_cast<int>(f), static_cast<int>(bi), gl, hl, nl};
          }
        }
      }
    }

    if (best.feature < 0 || best.gain <= 1e-12) {
      auto& node = tree.nodes[node_id];
      if (mode == EnsembleMode::boosted)
        node.value = hp.learning_rate * (-g / (h + kLambda));
      else
        node.value = g / static_cast<double>(n);  // mean label
      return node_id;
    }

    if (gain_out) (*gain_out)[best.feature] += best.gain;
    const std::uint8_t* colbin = &binned.idx[best.feature * d.rows];
    auto mid_it = std::stable_partition(
        order.begin() + begin, order.begin() + end,
        [&](std::size_t i) { return colbin[i] <= best.bin; });
    const std::size_t mid = static_cast<std::size_t>(mid_it - order.begin());

    tree.nodes[node_id].feature = best.feature;
    tree.nodes[node_id].threshold = binned.edges[best.feature][best.bin];
    const int left = build_node(begin, mid, depth + 1, best.gl, best.hl);
    const int right = build_node(mid, end, depth + 1, g - best.gl, h - best.hl);
    tree.nodes[node_id].left = left;
    tree.nodes[node_id].right = right;
    return node_id;
  }
};

std::vector<std::size_t> pick_features(std::size_t cols, double fraction, std::mt19937_64& rng) {
  std::vector<std::size_t> all(cols);
  for (std::size_t i = 0; i < cols; ++i) all[i] = i;
  auto m = static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(cols)));
  m = std::clamp<std::size_t>(m, 1, cols);
  // Explicit Fisher-Yates so the draw sequence does not depend on the
  // standard library's shuffle.
  for (std::size_t i = cols - 1; i > 0; --i) {
    std::size_t j = rng() % (i + 1);
    std::swap(all[i], all[j]);
  }
  all.resize(m);
  std::sort(all.begin(), all.end());
  return all;
}

}  // namespace

TreeEnsemble train(const DataMatrix& data, const std::vector<std::string>& feature_names,
                   const Hyperparams& hp, EnsembleMode mode) {
  hp.validate();
  if (data.rows == 0 || data.cols == 0) throw ConfigError("train: empty dataset");
  if (feature_names.size() != data.cols)
    throw ConfigError("train: feature name count mismatch");
  std::size_t npos = 0;
  for (int y : data.y) npos += y;
  if (npos == 0 || npos == data.rows)
    throw ConfigError("train: dataset has a single class");

  TreeEnsemble model;
  model.mode_ = mode;
  model.hp_ = hp;
  model.n_features_ = data.cols;
  std::uint64_t mh = fnv1a("memfp-manifest-v1");
  for (const auto& n : feature_names) {
    mh = fnv1a(n, mh);
    mh = fnv1a("|", mh);
  }
  model.manifest_hash_ = mh;
  model.feature_gain_.assign(data.cols, 0.0);

  const Binned binned = bin_features(data);
  std::mt19937_64 rng(hp.seed);

  const double p0 = std::clamp(static_cast<double>(npos) / static_cast<double>(data.rows),
                               1e-6, 1.0 - 1e-6);

  if (mode == EnsembleMode::boosted) {
    model.base_score_ = std::log(p0 / (1.0 - p0));
    std::vector<double> score(data.rows, model.base_score_);
    std::vector<double> grad(data.rows), hess(data.rows);
    for (int m = 0; m < hp.n_trees; ++m) {
      for (std::size_t i = 0; i < data.rows; ++i) {
        const double p = 1.0 / (1.0 + std::exp(-score[i]));
        grad[i] = p - data.y[i];
        hess[i] = p * (1.0 - p);
      }
      TreeBuilder builder{data, binned, hp, mode, pick_features(data.cols, hp.feature_subsample, rng),
                          {}, std::move(grad), std::move(hess), &model.feature_gain_};
      builder.order.resize(data.rows);
      for (std::size_t i = 0; i < data.rows; ++i) builder.order[i] = i;
      double g = 0, h = 0;
      for (std::size_t i = 0; i < data.rows; ++i) {
        g += builder.grad[i];
        h += builder.hess[i];
      }
      builder.build_node(0, data.rows, 0, g, h);
      grad = std::move(builder.grad);
      hess = std::move(builder.hess);
      for (std::size_t i = 0; i < data.rows; ++i)
        score[i] += builder.tree.leaf_value(
            std::span<const double>(&data.x[i * data.cols], data.cols));
      model.trees_.push_back(std::move(builder.tree));
    }
  } else {
    model.base_score_ = p0;
    std::vector<double> labels(data.rows);
    for (std::size_t i = 0; i < data.rows; ++i) labels[i] = data.y[i];
    for (int m = 0; m < hp.n_trees; ++m) {
      TreeBuilder builder{data, binned, hp, mode, pick_features(data.cols, hp.feature_subsample, rng),
                          {}, labels, std::vector<double>(data.rows, 1.0),
                          &model.feature_gain_};
      builder.order.resize(data.rows);
      double g = 0;
      for (std::size_t i = 0; i < data.rows; ++i) {
        builder.order[i] = rng() % data.rows;  // bootstrap
        g += labels[builder.order[i]];
      }
      builder.build_node(0, data.rows, 0, g, static_cast<double>(data.rows));
      model.trees_.push_back(std::move(builder.tree));
    }
  }
  return model;
}

void save_model(const TreeEnsemble& model, std::ostream& out, const std::string& meta) {
  auto hexf = [](double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%a", v);
    return std::string(buf);
  };
  out << "memfp-model v1\n";
  if (!meta.empty()) out << "# " << meta << '\n';
  out << "mode " << (model.mode_ == EnsembleMode::boosted ? "boosted" : "forest") << '\n';
  out << "n_features " << model.n_features_ << '\n';
  out << "manifest_hash " << hash_hex(model.manifest_hash_) << '\n';
  out << "base_score " << hexf(model.base_score_) << '\n';
  const auto& hp = model.hp_;
  out << "hyperparams " << hp.n_trees << ' ' << hp.max_depth << ' ' << hexf(hp.learning_rate)
      << ' ' << hp.min_samples_leaf << ' ' << hexf(hp.feature_subsample) << ' ' << hp.seed
      << '\n';
  out << "feature_gain";
  for (double g : model.feature_gain_) out << ' ' << hexf(g);
  out << '\n';
  out << "trees " << model.trees_.size() << '\n';
  for (const auto& t : model.trees_) {
    out << "tree " << t.nodes.size() << '\n';
    for (const auto& n : t.nodes)
      out << n.feature << ' ' << hexf(n.threshold) << ' ' << n.left << ' ' << n.right << ' '
          << hexf(n.value) << '\n';
  }
  out << "end\n";
}

void save_model_file(const TreeEnsemble& model, const std::string& path,
                     const std::string& meta) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write model: " + path);
  save_model(model, out, meta);
}

TreeEnsemble load_model(std::istream& in) {
  std::string line;
  auto next = [&]() -> std::string& {
    while (std::getline(in, line)) {
      if (!line.empty() && line[0] != '#') return line;
    }
    throw IoError("model file truncated");
  };
  auto expect = [&](const std::string& tag) -> std::istringstream {
    std::istringstream is(next());
    std::string got;
    is >> got;
    if (got != tag) throw IoError("model file: expected '" + tag + "', got '" + got + "'");
    return is;
  };

  if (next() != "memfp-model v1") throw IoError("model file: bad magic");
  TreeEnsemble m;
  {
    auto is = expect("mode");
    std::string mode;
    is >> mode;
    if (mode == "boosted") m.mode_ = EnsembleMode::boosted;
    else if (mode == "forest") m.mode_ = EnsembleMode::forest;
    else throw IoError("model file: unknown mode " + mode);
  }
  expect("n_features") >> m.n_features_;
  {
    auto is = expect("manifest_hash");
    std::string hex;
    is >> hex;
    m.manifest_hash_ = std::stoull(hex, nullptr, 16);
  }
  {
    auto is = expect("base_score");
    std::string v;
    is >> v;
    m.base_score_ = std::strtod(v.c_str(), nullptr);
  }
  {
    auto is = expect("hyperparams");
    std::string lr, fs;
    is >> m.hp_.n_trees >> m.hp_.max_depth >> lr >> m.hp_.min_samples_leaf >> fs >> m.hp_.seed;
    m.hp_.learning_rate = std::strtod(lr.c_str(), nullptr);
    m.hp_.feature_subsample = std::strtod(fs.c_str(), nullptr);
  }
  {
    auto is = expect("feature_gain");
    std::string v;
    while (is >> v) m.feature_gain_.push_back(std::strtod(v.c_str(), nullptr));
  }
  std::size_t n_trees = 0;
  expect("trees") >> n_trees;
  for (std::size_t t = 0; t < n_trees; ++t) {
    std::size_t n_nodes = 0;
    expect("tree") >> n_nodes;
    Tree tree;
    tree.nodes.resize(n_nodes);
    for (auto& node : tree.nodes) {
      std::istringstream is(next());
      std::string th, val;
      is >> node.feature >> th >> node.left >> node.right >> val;
      if (!is) throw IoError("model file: bad node record");
      node.threshold = std::strtod(th.c_str(), nullptr);
      node.value = std::strtod(val.c_str(), nullptr);
    }
    m.trees_.push_back(std::move(tree));
  }
  if (next() != "end") throw IoError("model file: missing end marker");
  return m;
}

TreeEnsemble load_model_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open model: " + path);
  return load_model(in);
}

}  // namespace memfp
