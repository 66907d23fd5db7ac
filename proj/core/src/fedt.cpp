#include "fallcloud/fedt.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <fmt/format.h>

#include "fallcloud/error.hpp"
#include "fallcloud/parallel.hpp"

namespace fallcloud::fedt {

// ---- trees -----------------------------------------------------------------

RegressionTree::RegressionTree(std::vector<Node> nodes) : nodes_(std::move(nodes)) {
  if (nodes_.empty()) throw Error(Errc::Contract, "tree has no nodes");
  std::vector<int> parents(nodes_.size(), 0);
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    const auto& n = nodes_[i];
    if (n.is_leaf()) {
      if (!std::isfinite(n.weight)) throw Error(Errc::Contract, "leaf weight is not finite");
      continue;
    }
    const auto size = static_cast<std::int32_t>(nodes_.size());
    const auto self = static_cast<std::int32_t>(i);
    if (n.left <= self || n.right <= self || n.left >= size || n.right >= size || n.left == n.right) {
      throw Error(Errc::Contract, fmt::format("node {} has invalid children", i));
    }
    if (std::isnan(n.threshold)) throw Error(Errc::Contract, "split threshold is NaN");
    ++parents[static_cast<std::size_t>(n.left)];
    ++parents[static_cast<std::size_t>(n.right)];
  }
  for (std::size_t i = 1; i < nodes_.size(); ++i) {
    if (parents[i] != 1) throw Error(Errc::Contract, fmt::format("node {} is not reachable exactly once", i));
  }
}

RegressionTree RegressionTree::leaf(double weight) {
  Node n;
  n.weight = weight;
  return RegressionTree({n});
}

RegressionTree RegressionTree::stump(std::int32_t feature, double threshold, double left_weight,
                                     double right_weight) {
  Node root;
  root.feature = feature;
  root.threshold = threshold;
  root.left = 1;
  root.right = 2;
  Node l, r;
  l.weight = left_weight;
  r.weight = right_weight;
  return RegressionTree({root, l, r});
}

double RegressionTree::predict(std::span<const double> x) const {
  std::size_t i = 0;
  for (;;) {
    const Node& n = nodes_[i];
    if (n.is_leaf()) return n.weight;
    const auto f = static_cast<std::size_t>(n.feature);
    if (f >= x.size()) {
      throw Error(Errc::Contract, fmt::format("tree splits on feature {} but vector has {}", f, x.size()));
    }
    i = static_cast<std::size_t>(x[f] < n.threshold ? n.left : n.right);
  }
}

std::size_t RegressionTree::leaf_count() const noexcept {
  return static_cast<std::size_t>(std::count_if(nodes_.begin(), nodes_.end(), [](const Node& n) { return n.is_leaf(); }));
}

std::size_t RegressionTree::depth() const noexcept {
  std::vector<std::size_t> d(nodes_.size(), 0);
  std::size_t deepest = 0;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    deepest = std::max(deepest, d[i]);
    if (!nodes_[i].is_leaf()) {
      d[static_cast<std::size_t>(nodes_[i].left)] = d[i] + 1;
      d[static_cast<std::size_t>(nodes_[i].right)] = d[i] + 1;
    }
  }
  return deepest;
}

double RegressionTree::sum_squared_weights() const noexcept {
  double s = 0.0;
  for (const auto& n : nodes_) {
    if (n.is_leaf()) s += n.weight * n.weight;
  }
  return s;
}

std::int32_t RegressionTree::max_feature() const noexcept {
  std::int32_t m = -1;
  for (const auto& n : nodes_) m = std::max(m, n.feature);
  return m;
}

double predict_tree(const RegressionTree& tree, std::span<const double> x) { return tree.predict(x); }

// ---- model -----------------------------------------------------------------

void Hyperparameters::validate() const {
  if (rounds == 0) throw Error(Errc::Parameter, "rounds must be >= 1");
  if (!(alpha >= 0.0) || !(beta >= 0.0)) throw Error(Errc::Parameter, "alpha and beta must be >= 0");
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
    throw Error(Errc::Parameter, "learning_rate must be positive");
  }
  if (!(min_child_hessian >= 0.0)) throw Error(Errc::Parameter, "min_child_hessian must be >= 0");
  if (positive_weight && !(*positive_weight > 0.0)) throw Error(Errc::Parameter, "positive_weight must be > 0");
  if (base_score && !std::isfinite(*base_score)) throw Error(Errc::Parameter, "base_score must be finite");
  if (!(cutoff > 0.0 && cutoff < 1.0)) throw Error(Errc::Parameter, "cutoff must lie in (0, 1)");
}

void FedtModel::validate() const {
  if (trees.empty()) throw Error(Errc::Contract, "model needs at least one tree");
  if (!(params.alpha >= 0.0) || !(params.beta >= 0.0)) throw Error(Errc::Contract, "alpha and beta must be >= 0");
  if (fingerprint == 0) throw Error(Errc::Contract, "model has no registry fingerprint");
  if (!std::isfinite(base_score) || !std::isfinite(params.learning_rate)) {
    throw Error(Errc::Contract, "non-finite base score or learning rate");
  }
  for (const auto& t : trees) {
    if (t.max_feature() >= static_cast<std::int32_t>(feature_count)) {
      throw Error(Errc::Contract, "tree references a feature beyond the model arity");
    }
    if (t.depth() > params.max_depth) throw Error(Errc::Contract, "tree deeper than max_depth");
  }
}

std::size_t FedtModel::total_leaves() const noexcept {
  std::size_t k = 0;
  for (const auto& t : trees) k += t.leaf_count();
  return k;
}

double FedtModel::total_squared_weights() const noexcept {
  double s = 0.0;
  for (const auto& t : trees) s += t.sum_squared_weights();
  return s;
}

void TrainingSet::add(std::span<const double> x, Label label) {
  if (rows == 0 && cols == 0) cols = x.size();
  if (x.size() != cols) throw Error(Errc::Contract, "ragged training rows");
  values.insert(values.end(), x.begin(), x.end());
  labels.push_back(label == Label::Fall ? 1 : 0);
  ++rows;
}

TrainingSet TrainingSet::from(std::span<const features::FeatureVector> xs, std::span<const Label> labels,
                              const features::FeatureRegistry* registry) {
  if (xs.size() != labels.size()) throw Error(Errc::Contract, "feature/label count mismatch");
  TrainingSet set;
  if (registry) {
    set.fingerprint = registry->fingerprint();
    set.registry = registry->canonical();
  } else if (!xs.empty()) {
    set.fingerprint = xs.front().fingerprint;
  }
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (xs[i].fingerprint != set.fingerprint) throw Error(Errc::Incompatible, "mixed feature registries");
    set.add(xs[i].values, labels[i]);
  }
  return set;
}

double predict_margin(const FedtModel& model, std::span<const double> x) {
  if (x.size() != model.feature_count) {
    throw Error(Errc::Contract, fmt::format("model expects {} features, got {}", model.feature_count, x.size()));
  }
  double sum = 0.0;
  for (const auto& t : model.trees) sum += t.predict(x);
  return model.base_score + model.params.learning_rate * sum;
}

double predict_margin(const FedtModel& model, const features::FeatureVector& x) {
  if (x.fingerprint != model.fingerprint) {
    throw Error(Errc::Incompatible, fmt::format("vector registry {} differs from model registry {}",
                                                features::fingerprint_hex(x.fingerprint),
                                                features::fingerprint_hex(model.fingerprint)));
  }
  return predict_margin(model, std::span<const double>(x.values));
}

double logistic(double margin) noexcept {
  if (margin >= 0) return 1.0 / (1.0 + std::exp(-margin));
  const double e = std::exp(margin);
  return e / (1.0 + e);
}

double logistic_loss(double margin, std::uint8_t label) noexcept {
  // log(1 + exp(m)) - y m, written to avoid overflow.
  return std::max(margin, 0.0) + std::log1p(std::exp(-std::abs(margin))) - (label ? margin : 0.0);
}

Verdict classify_margin(double margin, double cutoff) {
  Verdict v;
  v.probability = logistic(margin);
  v.label = v.probability >= cutoff ? Label::Fall : Label::Adl;
  return v;
}

Verdict classify(const FedtModel& model, const features::FeatureVector& x) {
  return classify_margin(predict_margin(model, x), model.cutoff);
}

double leaf_weight(double grad_sum, double hess_sum, double beta) {
  const double denom = hess_sum + 2.0 * beta;
  if (!(denom > 0.0)) throw Error(Errc::DegenerateLeaf, fmt::format("H + 2*beta = {} is not positive", denom));
  return -grad_sum / denom;
}

double split_gain(double grad_sum, double hess_sum, double grad_left, double hess_left, double alpha,
                  double beta) {
  const double grad_right = grad_sum - grad_left;
  const double hess_right = hess_sum - hess_left;
  const double dl = hess_left + 2.0 * beta;
  const double dr = hess_right + 2.0 * beta;
  const double dp = hess_sum + 2.0 * beta;
  if (!(dl > 0.0) || !(dr > 0.0) || !(dp > 0.0)) {
    throw Error(Errc::DegenerateSplit, "nonpositive H + 2*beta in split");
  }
  return 0.5 * (grad_left * grad_left / dl + grad_right * grad_right / dr - grad_sum * grad_sum / dp) - alpha;
}

double objective(const FedtModel& model, const TrainingSet& data, double alpha, double beta,
                 std::span<const double> weights) {
  if (!weights.empty() && weights.size() != data.rows) throw Error(Errc::Contract, "weight count mismatch");
  double loss = 0.0;
  for (std::size_t i = 0; i < data.rows; ++i) {
    const double l = logistic_loss(predict_margin(model, data.row(i)), data.labels[i]);
    loss += weights.empty() ? l : weights[i] * l;
  }
  // Penalize the scores each tree actually contributes, eta * w.
  const double eta2 = model.params.learning_rate * model.params.learning_rate;
  double reg = 0.0;
  for (const auto& t : model.trees) {
    reg += alpha * static_cast<double>(t.leaf_count()) + beta * eta2 * t.sum_squared_weights();
  }
  return loss + reg;
}

std::vector<double> example_weights(const TrainingSet& data, double positive_weight) {
  std::vector<double> w(data.rows);
  for (std::size_t i = 0; i < data.rows; ++i) w[i] = data.labels[i] ? positive_weight : 1.0;
  return w;
}

// ---- training --------------------------------------------------------------

namespace {

struct Candidate {
  double gain = 0.0;
  double threshold = 0.0;
  bool valid = false;
};

/// Column-sorted view of the training matrix, built once per train() call.
struct SortedColumns {
  std::vector<std::vector<std::uint32_t>> index;
  std::vector<std::vector<double>> value;
};

SortedColumns presort(const TrainingSet& data, std::size_t threads) {
  SortedColumns s;
  s.index.resize(data.cols);
  s.value.resize(data.cols);
  parallel_for(data.cols, threads, [&](std::size_t f) {
    auto& idx = s.index[f];
    idx.resize(data.rows);
    std::iota(idx.begin(), idx.end(), 0u);
    std::stable_sort(idx.begin(), idx.end(), [&](std::uint32_t a, std::uint32_t b) {
      return data.values[a * data.cols + f] < data.values[b * data.cols + f];
    });
    auto& val = s.value[f];
    val.resize(data.rows);
    for (std::size_t r = 0; r < data.rows; ++r) val[r] = data.values[idx[r] * data.cols + f];
  });
  return s;
}

double midpoint(double lo, double hi) {
  const double mid = lo + 0.5 * (hi - lo);
  // Adjacent doubles can round the midpoint onto lo; hi still separates them.
  return mid > lo ? mid : hi;
}

class TreeGrower {
 public:
  TreeGrower(const TrainingSet& data, const SortedColumns& sorted, const Hyperparameters& hp)
      : data_(data), sorted_(sorted), hp_(hp), node_of_(data.rows) {}

  /// Grows one tree on (g, h); fills leaf_of with each row's final node.
  RegressionTree grow(std::span<const double> g, std::span<const double> h,
                      std::vector<std::int32_t>& leaf_of) {
    std::fill(node_of_.begin(), node_of_.end(), 0);
    nodes_.assign(1, Node{});
    grad_.assign(1, 0.0);
    hess_.assign(1, 0.0);
    depth_.assign(1, 0);
    for (std::size_t i = 0; i < data_.rows; ++i) {
      grad_[0] += g[i];
      hess_[0] += h[i];
    }

    std::vector<std::int32_t> frontier = {0};
    while (!frontier.empty()) {
      std::vector<std::int32_t> open;
      for (auto v : frontier) {
        const auto vi = static_cast<std::size_t>(v);
        if (depth_[vi] < hp_.max_depth && hess_[vi] >= 2.0 * hp_.min_child_hessian) open.push_back(v);
      }
      if (open.empty()) break;
      const auto best = find_splits(open, g, h);

      std::vector<std::int32_t> next;
      for (std::size_t s = 0; s < open.size(); ++s) {
        if (!best[s].valid || !(best[s].gain > 0.0)) continue;
        const auto v = static_cast<std::size_t>(open[s]);
        const auto left = static_cast<std::int32_t>(nodes_.size());
        nodes_[v].feature = best_feature_[s];
        nodes_[v].threshold = best[s].threshold;
        nodes_[v].left = left;
        nodes_[v].right = left + 1;
        for (int c = 0; c < 2; ++c) {
          nodes_.push_back(Node{});
          grad_.push_back(0.0);
          hess_.push_back(0.0);
          depth_.push_back(depth_[v] + 1);
          next.push_back(left + c);
        }
      }
      if (next.empty()) break;
      // Route rows and accumulate child sums in row order.
      for (std::size_t i = 0; i < data_.rows; ++i) {
        const auto& n = nodes_[static_cast<std::size_t>(node_of_[i])];
        if (n.is_leaf()) continue;
        const double x = data_.values[i * data_.cols + static_cast<std::size_t>(n.feature)];
        const auto child = x < n.threshold ? n.left : n.right;
        node_of_[i] = child;
        grad_[static_cast<std::size_t>(child)] += g[i];
        hess_[static_cast<std::size_t>(child)] += h[i];
      }
      frontier = std::move(next);
    }

    for (std::size_t v = 0; v < nodes_.size(); ++v) {
      if (!nodes_[v].is_leaf()) continue;
      const double denom = hess_[v] + 2.0 * hp_.beta;
      // A leaf with no curvature and no regularization carries no information.
      nodes_[v].weight = denom > 0.0 ? leaf_weight(grad_[v], hess_[v], hp_.beta) : 0.0;
    }
    leaf_of = node_of_;
    return RegressionTree(nodes_);
  }

 private:
  std::vector<Candidate> find_splits(const std::vector<std::int32_t>& open, std::span<const double> g,
                                     std::span<const double> h) {
    const std::size_t slots = open.size();
    std::vector<std::int32_t> slot_of(nodes_.size(), -1);
    for (std::size_t s = 0; s < slots; ++s) slot_of[static_cast<std::size_t>(open[s])] = static_cast<std::int32_t>(s);

    std::vector<std::vector<Candidate>> per_feature(data_.cols, std::vector<Candidate>(slots));
    parallel_for(data_.cols, hp_.threads, [&](std::size_t f) {
      std::vector<double> gl(slots, 0.0), hl(slots, 0.0), last(slots, 0.0);
      std::vector<char> seen(slots, 0);
      auto& best = per_feature[f];
      const auto& idx = sorted_.index[f];
      const auto& val = sorted_.value[f];
      for (std::size_t r = 0; r < idx.size(); ++r) {
        const std::uint32_t row = idx[r];
        const auto slot = slot_of[static_cast<std::size_t>(node_of_[row])];
        if (slot < 0) continue;
        const auto s = static_cast<std::size_t>(slot);
        const double x = val[r];
        if (seen[s] && x > last[s]) {
          const auto v = static_cast<std::size_t>(open[s]);
          const double hr = hess_[v] - hl[s];
          if (hl[s] >= hp_.min_child_hessian && hr >= hp_.min_child_hessian &&
              hl[s] + 2.0 * hp_.beta > 0.0 && hr + 2.0 * hp_.beta > 0.0) {
            const double gain = split_gain(grad_[v], hess_[v], gl[s], hl[s], hp_.alpha, hp_.beta);
            if (!best[s].valid || gain > best[s].gain) best[s] = {gain, midpoint(last[s], x), true};
          }
        }
        gl[s] += g[row];
        hl[s] += h[row];
        last[s] = x;
        seen[s] = 1;
      }
    });

    // Lowest feature index wins ties; within a feature the lowest threshold did.
    std::vector<Candidate> best(slots);
    best_feature_.assign(slots, -1);
    for (std::size_t f = 0; f < data_.cols; ++f) {
      for (std::size_t s = 0; s < slots; ++s) {
        const auto& c = per_feature[f][s];
        if (c.valid && (!best[s].valid || c.gain > best[s].gain)) {
          best[s] = c;
          best_feature_[s] = static_cast<std::int32_t>(f);
        }
      }
    }
    return best;
  }

  const TrainingSet& data_;
  const SortedColumns& sorted_;
  const Hyperparameters& hp_;
  std::vector<std::int32_t> node_of_;
  std::vector<Node> nodes_;
  std::vector<double> grad_, hess_;
  std::vector<std::size_t> depth_;
  std::vector<std::int32_t> best_feature_;
};

void check_training_set(const TrainingSet& data) {
  if (data.rows == 0 || data.cols == 0) throw Error(Errc::CannotTrain, "empty training set");
  if (data.values.size() != data.rows * data.cols || data.labels.size() != data.rows) {
    throw Error(Errc::Contract, "training set dimensions are inconsistent");
  }
  for (double v : data.values) {
    if (!std::isfinite(v)) throw Error(Errc::Contract, "non-finite feature value in training set");
  }
  for (auto y : data.labels) {
    if (y > 1) throw Error(Errc::Contract, "labels must be 0 or 1");
  }
}

}  // namespace

FedtModel train(const TrainingSet& data, const Hyperparameters& params, TrainingLog* log) {
  params.validate();
  check_training_set(data);
  const auto falls = static_cast<std::size_t>(std::count(data.labels.begin(), data.labels.end(), 1));
  const std::size_t adls = data.rows - falls;
  if (falls == 0 || adls == 0) throw Error(Errc::CannotTrain, "training data must contain both FALL and ADL examples");

  FedtModel model;
  model.params = params;
  model.params.positive_weight = params.positive_weight.value_or(static_cast<double>(adls) / static_cast<double>(falls));
  model.params.base_score = params.base_score.value_or(std::log(static_cast<double>(falls) / static_cast<double>(adls)));
  model.base_score = *model.params.base_score;
  model.cutoff = params.cutoff;
  model.fingerprint = data.fingerprint;
  model.registry = data.registry;
  model.feature_count = data.cols;

  const auto weights = example_weights(data, *model.params.positive_weight);
  const auto sorted = presort(data, params.threads);
  TreeGrower grower(data, sorted, model.params);

  std::vector<double> margin(data.rows, model.base_score);
  std::vector<double> g(data.rows), h(data.rows);
  std::vector<std::int32_t> leaf_of;
  double regularization = 0.0;
  if (log) {
    log->rounds.clear();
    log->positive_weight = *model.params.positive_weight;
  }

  for (std::size_t m = 0; m < params.rounds; ++m) {
    for (std::size_t i = 0; i < data.rows; ++i) {
      const double p = logistic(margin[i]);
      g[i] = weights[i] * (p - data.labels[i]);
      h[i] = weights[i] * p * (1.0 - p);
    }
    auto tree = grower.grow(g, h, leaf_of);
    const auto& nodes = tree.nodes();
    for (std::size_t i = 0; i < data.rows; ++i) {
      margin[i] += params.learning_rate * nodes[static_cast<std::size_t>(leaf_of[i])].weight;
    }
    regularization += params.alpha * static_cast<double>(tree.leaf_count()) +
                      params.beta * params.learning_rate * params.learning_rate * tree.sum_squared_weights();
    if (log) {
      double loss = 0.0;
      for (std::size_t i = 0; i < data.rows; ++i) loss += weights[i] * logistic_loss(margin[i], data.labels[i]);
      log->rounds.push_back({m + 1, loss + regularization, tree.leaf_count()});
    }
    model.trees.push_back(std::move(tree));
  }
  return model;
}

// ---- serialization ---------------------------------------------------------

namespace {

constexpr std::string_view kMagic = "FEDTMODL";

void write_hyperparameters(ByteWriter& w, const FedtModel& m) {
  const auto& p = m.params;
  w.u64(p.rounds);
  w.f64(p.alpha);
  w.f64(p.beta);
  w.f64(p.learning_rate);
  w.u64(p.max_depth);
  w.f64(p.min_child_hessian);
  w.f64(p.positive_weight.value_or(std::numeric_limits<double>::quiet_NaN()));
  w.f64(p.base_score.value_or(std::numeric_limits<double>::quiet_NaN()));
  w.f64(p.cutoff);
}

Hyperparameters read_hyperparameters(ByteReader& r) {
  Hyperparameters p;
  p.rounds = r.u64();
  p.alpha = r.f64();
  p.beta = r.f64();
  p.learning_rate = r.f64();
  p.max_depth = r.u64();
  p.min_child_hessian = r.f64();
  if (const double v = r.f64(); !std::isnan(v)) p.positive_weight = v;
  if (const double v = r.f64(); !std::isnan(v)) p.base_score = v;
  p.cutoff = r.f64();
  return p;
}

}  // namespace

Bytes save_model(const FedtModel& model) {
  Bytes body;
  ByteWriter w(body);
  write_hyperparameters(w, model);
  w.f64(model.base_score);
  w.f64(model.cutoff);
  w.u64(model.fingerprint);
  w.u64(model.feature_count);
  w.str(model.registry);
  w.str(model.model_id);
  w.u64(model.trees.size());
  for (const auto& t : model.trees) {
    w.u32(static_cast<std::uint32_t>(t.nodes().size()));
    for (const auto& n : t.nodes()) {
      w.i32(n.feature);
      w.f64(n.threshold);
      w.i32(n.left);
      w.i32(n.right);
      w.f64(n.weight);
    }
  }

  Bytes out;
  ByteWriter head(out);
  head.raw(kMagic);
  head.u32(kModelFormatVersion);
  head.u64(body.size());
  head.raw(body);
  head.u32(crc32(body));
  return out;
}

FedtModel load_model(std::span<const std::uint8_t> bytes) {
  constexpr std::size_t kHeader = 8 + 4 + 8;
  if (bytes.size() < kMagic.size()) throw Error(Errc::Truncated, "model file shorter than its magic");
  if (!std::equal(kMagic.begin(), kMagic.end(), bytes.begin())) {
    throw Error(Errc::BadMagic, "not a model file");
  }
  if (bytes.size() < kHeader) throw Error(Errc::Truncated, "model header incomplete");
  ByteReader head(bytes.subspan(kMagic.size()));
  const auto version = head.u32();
  if (version != kModelFormatVersion) {
    throw Error(Errc::VersionMismatch, fmt::format("model format version {} (expected {})", version, kModelFormatVersion));
  }
  const auto body_len = head.u64();
  if (bytes.size() - kHeader < body_len || bytes.size() - kHeader - body_len < 4) {
    throw Error(Errc::Truncated, fmt::format("model body declares {} bytes, file holds {}", body_len, bytes.size() - kHeader));
  }
  if (bytes.size() - kHeader - body_len > 4) throw Error(Errc::Corrupt, "trailing bytes after model");
  const auto body = bytes.subspan(kHeader, body_len);
  ByteReader tail(bytes.subspan(kHeader + body_len));
  if (tail.u32() != crc32(body)) throw Error(Errc::ChecksumMismatch, "model checksum does not match");

  FedtModel m;
  try {
    ByteReader r(body);
    m.params = read_hyperparameters(r);
    m.base_score = r.f64();
    m.cutoff = r.f64();
    m.fingerprint = r.u64();
    m.feature_count = r.u64();
    m.registry = r.str();
    m.model_id = r.str();
    const auto count = r.u64();
    if (count > r.remaining()) throw Error(Errc::Corrupt, "tree count exceeds body size");
    for (std::uint64_t t = 0; t < count; ++t) {
      const auto n = r.u32();
      if (n == 0 || n > r.remaining()) throw Error(Errc::Corrupt, "bad node count");
      std::vector<Node> nodes(n);
      for (auto& node : nodes) {
        node.feature = r.i32();
        node.threshold = r.f64();
        node.left = r.i32();
        node.right = r.i32();
        node.weight = r.f64();
      }
      m.trees.emplace_back(std::move(nodes));
    }
    if (r.remaining() != 0) throw Error(Errc::Corrupt, "unparsed bytes in model body");
    m.validate();
  } catch (const Error& e) {
    // Checksummed body that fails to parse was written wrong, not cut short.
    if (e.code() == Errc::Corrupt) throw;
    throw Error(Errc::Corrupt, e.what());
  }
  if (!m.registry.empty() && features::fnv1a64(m.registry) != m.fingerprint) {
    throw Error(Errc::Incompatible, "model fingerprint does not match its embedded feature registry");
  }
  return m;
}

}  // namespace fallcloud::fedt
