#pragma once

// Q-function over (appearance ⊗ progress) inputs: a one-hidden-layer ReLU
// network with hand-written gradients, per-node evaluation and
// bonus-aware epsilon-greedy selection.

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <istream>
#include <limits>
#include <ostream>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "error.hpp"
#include "rng.hpp"
#include "topomap.hpp"

namespace topomacro {

using ActionFeature = std::vector<double>;

/// One-hot progress encoding of length n_targets.
inline std::vector<double> progress_one_hot(int achieved, int n_targets) {
  if (achieved < 0 || achieved >= n_targets)
    throw Error(ErrorKind::ShapeMismatch, "progress " + std::to_string(achieved) + " outside [0," +
                                              std::to_string(n_targets) + ")");
  std::vector<double> p(static_cast<std::size_t>(n_targets), 0.0);
  p[static_cast<std::size_t>(achieved)] = 1.0;
  return p;
}

inline ActionFeature action_feature(const AppearancePatch& patch) {
  return {patch.values().begin(), patch.values().end()};
}

/// Row-major flatten of f ⊗ p: entry (i, j) lands at i * |p| + j.
inline std::vector<double> outer_input(std::span<const double> f, std::span<const double> p, std::size_t d_a,
                                       std::size_t d_p) {
  if (f.size() != d_a || p.size() != d_p)
    throw Error(ErrorKind::ShapeMismatch, "outer_input expects " + std::to_string(d_a) + "x" + std::to_string(d_p) +
                                              ", got " + std::to_string(f.size()) + "x" + std::to_string(p.size()));
  std::vector<double> x(d_a * d_p);
  for (std::size_t i = 0; i < d_a; ++i)
    for (std::size_t j = 0; j < d_p; ++j) x[i * d_p + j] = f[i] * p[j];
  return x;
}

struct QParams {
  std::size_t d_a = 0;
  std::size_t d_p = 0;
  std::size_t hidden = 0;
  std::vector<double> w1;  // hidden x (d_a*d_p), row-major
  std::vector<double> b1;  // hidden
  std::vector<double> w2;  // 1 x hidden
  double b2 = 0.0;

  std::size_t input_size() const { return d_a * d_p; }

  static QParams zeros(std::size_t d_a, std::size_t d_p, std::size_t hidden) {
    QParams p;
    p.d_a = d_a;
    p.d_p = d_p;
    p.hidden = hidden;
    p.w1.assign(hidden * d_a * d_p, 0.0);
    p.b1.assign(hidden, 0.0);
    p.w2.assign(hidden, 0.0);
    return p;
  }

  /// Glorot-uniform weights, zero biases.
  static QParams glorot(std::size_t d_a, std::size_t d_p, std::size_t hidden, Rng& rng) {
    QParams p = zeros(d_a, d_p, hidden);
    const double lim1 = std::sqrt(6.0 / static_cast<double>(p.input_size() + hidden));
    const double lim2 = std::sqrt(6.0 / static_cast<double>(hidden + 1));
    for (double& w : p.w1) w = rng.uniform(-lim1, lim1);
    for (double& w : p.w2) w = rng.uniform(-lim2, lim2);
    return p;
  }

  friend bool operator==(const QParams&, const QParams&) = default;
};

using QGrads = QParams;

struct ForwardCache {
  std::vector<double> input;
  std::vector<double> pre;  // W1 x + b1
};

struct ForwardResult {
  double q = 0.0;
  ForwardCache cache;
};

inline ForwardResult forward(const QParams& params, std::span<const double> x) {
  if (x.size() != params.input_size())
    throw Error(ErrorKind::ShapeMismatch, "forward input length " + std::to_string(x.size()) + " != " +
                                              std::to_string(params.input_size()));
  const std::size_t n = x.size();
  // Outer-product inputs are mostly zero; only nonzero columns contribute.
  std::vector<std::size_t> nz;
  nz.reserve(n);
  for (std::size_t j = 0; j < n; ++j)
    if (x[j] != 0.0) nz.push_back(j);

  ForwardResult r;
  r.cache.input.assign(x.begin(), x.end());
  r.cache.pre.resize(params.hidden);
  double q = params.b2;
  for (std::size_t i = 0; i < params.hidden; ++i) {
    const double* row = params.w1.data() + i * n;
    double s = params.b1[i];
    for (std::size_t j : nz) s += row[j] * x[j];
    r.cache.pre[i] = s;
    if (s > 0.0) q += params.w2[i] * s;
  }
  r.q = q;
  return r;
}

/// dq * dq/dtheta for every parameter. ReLU'(0) is taken as 0.
inline QGrads backward(const QParams& params, const ForwardCache& cache, double dq) {
  QGrads g = QParams::zeros(params.d_a, params.d_p, params.hidden);
  g.b2 = dq;
  const std::size_t n = params.input_size();
  for (std::size_t i = 0; i < params.hidden; ++i) {
    const double pre = cache.pre[i];
    if (pre > 0.0) g.w2[i] = dq * pre;
    const double dpre = pre > 0.0 ? dq * params.w2[i] : 0.0;
    if (dpre == 0.0) continue;
    g.b1[i] = dpre;
    double* row = g.w1.data() + i * n;
    for (std::size_t j = 0; j < n; ++j) row[j] = dpre * cache.input[j];
  }
  return g;
}

struct NodeQ {
  NodeId id = 0;
  double q = 0.0;
};

inline std::vector<NodeQ> q_all_nodes(const QParams& params, const TopoMap& map, std::span<const double> progress) {
  if (map.empty()) throw Error(ErrorKind::EmptyMap, "q_all_nodes on empty map");
  std::vector<NodeQ> out;
  out.reserve(map.size());
  for (const auto& n : map.nodes()) {
    const auto x = outer_input(n.appearance.values(), progress, params.d_a, params.d_p);
    out.push_back({n.id, forward(params, x).q});
  }
  return out;
}

/// Epsilon-greedy over Q + bonus * [unexplored]; the bonus shapes the choice
/// only and never touches stored values. Greedy ties go to the smallest id.
inline NodeId select_action(std::span<const NodeQ> qvals, const std::set<NodeId>& unexplored, double bonus,
                            double epsilon, Rng& rng) {
  if (qvals.empty()) throw Error(ErrorKind::EmptyMap, "select_action with no candidates");
  if (rng.uniform() < epsilon) return qvals[rng.below(qvals.size())].id;
  const NodeQ* best = nullptr;
  double best_score = 0.0;
  for (const auto& nq : qvals) {
    const double score = nq.q + (unexplored.contains(nq.id) ? bonus : 0.0);
    if (best == nullptr || score > best_score || (score == best_score && nq.id < best->id)) {
      best = &nq;
      best_score = score;
    }
  }
  return best->id;
}

struct Transition {
  ActionFeature action_feature;
  std::vector<double> progress;
  double reward = 0.0;
  std::vector<double> next_progress;
  std::vector<ActionFeature> next_candidates;
  bool done = false;
};

struct TrainStepResult {
  QParams params;
  double mean_loss = 0.0;
};

inline double td_target(const QParams& target_params, const Transition& t, double gamma) {
  if (t.done) return t.reward;
  if (t.next_candidates.empty())
    throw Error(ErrorKind::EmptyCandidates, "non-terminal transition without next candidates");
  double best = -std::numeric_limits<double>::infinity();
  for (const auto& f : t.next_candidates)
    best = std::max(best, forward(target_params, outer_input(f, t.next_progress, target_params.d_a,
                                                             target_params.d_p)).q);
  return t.reward + gamma * best;
}

/// Mean squared TD error over the batch before the update.
inline double td_loss(const QParams& params, const QParams& target_params, std::span<const Transition> batch,
                      double gamma) {
  double loss = 0.0;
  for (const auto& t : batch) {
    const double y = td_target(target_params, t, gamma);
    const double q = forward(params, outer_input(t.action_feature, t.progress, params.d_a, params.d_p)).q;
    loss += (q - y) * (q - y);
  }
  return loss / static_cast<double>(batch.size());
}

/// One SGD step on mean (Q(s,a) - y)^2 with each gradient entry clipped to [-1, 1].
inline TrainStepResult td_train_step(const QParams& params, const QParams& target_params,
                                     std::span<const Transition> batch, double gamma, double lr) {
  if (batch.empty()) throw Error(ErrorKind::InvalidArgument, "empty batch");
  if (gamma < 0.0 || gamma >= 1.0) throw Error(ErrorKind::InvalidArgument, "gamma must be in [0,1)");
  const double scale = 1.0 / static_cast<double>(batch.size());
  QGrads total = QParams::zeros(params.d_a, params.d_p, params.hidden);
  double loss = 0.0;
  for (const auto& t : batch) {
    const double y = td_target(target_params, t, gamma);
    const auto fr = forward(params, outer_input(t.action_feature, t.progress, params.d_a, params.d_p));
    const double err = fr.q - y;
    loss += err * err;
    const auto g = backward(params, fr.cache, 2.0 * err * scale);
    for (std::size_t k = 0; k < total.w1.size(); ++k) total.w1[k] += g.w1[k];
    for (std::size_t k = 0; k < total.b1.size(); ++k) total.b1[k] += g.b1[k];
    for (std::size_t k = 0; k < total.w2.size(); ++k) total.w2[k] += g.w2[k];
    total.b2 += g.b2;
  }
  auto clip = [](double v) { return std::clamp(v, -1.0, 1.0); };
  TrainStepResult out{params, loss * scale};
  for (std::size_t k = 0; k < total.w1.size(); ++k) out.params.w1[k] -= lr * clip(total.w1[k]);
  for (std::size_t k = 0; k < total.b1.size(); ++k) out.params.b1[k] -= lr * clip(total.b1[k]);
  for (std::size_t k = 0; k < total.w2.size(); ++k) out.params.w2[k] -= lr * clip(total.w2[k]);
  out.params.b2 -= lr * clip(total.b2);
  return out;
}

inline QParams sync_target(const QParams& params) { return params; }

// ---- binary checkpoint ---------------------------------------------------
// ASCII header "qnet v1 <d_a> <d_p> <h>\n", then W1, b1, W2, b2 as
// little-endian IEEE-754 doubles, row-major.

namespace detail {

inline void put_le(std::ostream& os, double v) {
  const auto bits = std::bit_cast<std::uint64_t>(v);
  char buf[8];
  for (int i = 0; i < 8; ++i) buf[i] = static_cast<char>((bits >> (8 * i)) & 0xff);
  os.write(buf, 8);
}

inline double get_le(std::istream& is) {
  unsigned char buf[8];
  if (!is.read(reinterpret_cast<char*>(buf), 8)) throw Error(ErrorKind::ParseError, "qnet checkpoint truncated");
  std::uint64_t bits = 0;
  for (int i = 7; i >= 0; --i) bits = (bits << 8) | buf[i];
  return std::bit_cast<double>(bits);
}

}  // namespace detail

inline void write_checkpoint(std::ostream& os, const QParams& p) {
  os << "qnet v1 " << p.d_a << ' ' << p.d_p << ' ' << p.hidden << '\n';
  for (double v : p.w1) detail::put_le(os, v);
  for (double v : p.b1) detail::put_le(os, v);
  for (double v : p.w2) detail::put_le(os, v);
  detail::put_le(os, p.b2);
}

inline QParams read_checkpoint(std::istream& is) {
  std::string line, magic, version;
  if (!std::getline(is, line)) throw Error(ErrorKind::ParseError, "qnet checkpoint: missing header");
  std::istringstream hs(line);
  std::size_t d_a = 0, d_p = 0, h = 0;
  if (!(hs >> magic >> version >> d_a >> d_p >> h) || magic != "qnet" || version != "v1")
    throw Error(ErrorKind::ParseError, "qnet checkpoint: bad header '" + line + "'");
  QParams p = QParams::zeros(d_a, d_p, h);
  for (double& v : p.w1) v = detail::get_le(is);
  for (double& v : p.b1) v = detail::get_le(is);
  for (double& v : p.w2) v = detail::get_le(is);
  p.b2 = detail::get_le(is);
  return p;
}

}  // namespace topomacro
