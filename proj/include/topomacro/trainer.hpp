#pragma once

// Episode runner, replay buffer, training loop, frozen-policy evaluation and
// the uniform-random baseline.

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <numeric>
#include <ostream>
#include <string>
#include <vector>

#include "planner.hpp"
#include "qnet.hpp"
#include "rng.hpp"
#include "simenv.hpp"
#include "topomap.hpp"

namespace topomacro {

struct TrainConfig {
  SceneConfig scene;
  PlannerConfig planner;
  int merge_radius = 1;
  int explored_radius = 1;
  RewardScheme scheme = RewardScheme::Intermediate;
  int n_scenes = 100;
  int macro_cap = 250;
  double gamma = 0.95;
  double lr = 1e-3;
  std::size_t buffer_capacity = 50'000;
  std::size_t batch_size = 32;
  int target_sync_every = 500;
  double bonus = 1.0;
  double epsilon = 0.05;
  int episodes = 1000;
  std::uint64_t seed = 0;
  std::size_t hidden = 64;
  std::size_t max_candidates = 64;
  int checkpoint_every = 0;  // episodes; 0 disables intermediate checkpoints

  std::size_t feature_size() const { return static_cast<std::size_t>(scene.patch_size * scene.patch_size * 3); }
  std::size_t progress_size() const { return static_cast<std::size_t>(scene.n_targets); }
};

inline std::uint64_t training_scene_seed(const TrainConfig& cfg, int index) {
  return cfg.seed * 100'000 + static_cast<std::uint64_t>(index);
}

inline std::uint64_t heldout_scene_seed(const TrainConfig& cfg, int index) {
  return cfg.seed * 100'000 + 50'000 + static_cast<std::uint64_t>(index);
}

inline QParams initial_params(const TrainConfig& cfg) {
  Rng rng(mix_seed(cfg.seed, 0x1417));
  return QParams::glorot(cfg.feature_size(), cfg.progress_size(), cfg.hidden, rng);
}

/// Fixed-capacity FIFO of transitions with uniform sampling (with replacement).
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity) : capacity_(capacity) { items_.reserve(std::min<std::size_t>(capacity, 4096)); }

  void push(Transition t) {
    if (items_.size() < capacity_) {
      items_.push_back(std::move(t));
    } else {
      items_[next_] = std::move(t);
    }
    next_ = (next_ + 1) % capacity_;
  }

  std::size_t size() const { return items_.size(); }
  std::size_t capacity() const { return capacity_; }
  const Transition& operator[](std::size_t i) const { return items_[i]; }

  std::vector<Transition> sample(std::size_t n, Rng& rng) const {
    std::vector<Transition> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) out.push_back(items_[rng.below(items_.size())]);
    return out;
  }

 private:
  std::size_t capacity_;
  std::size_t next_ = 0;
  std::vector<Transition> items_;
};

/// Mutable training state shared across episodes.
struct Learner {
  QParams params;
  QParams target;
  ReplayBuffer buffer;
  long train_steps = 0;

  Learner(QParams initial, std::size_t capacity)
      : params(std::move(initial)), target(sync_target(params)), buffer(capacity) {}
};

/// Up to `cap` node features; a uniform subsample (ascending id order) when the map is larger.
inline std::vector<ActionFeature> candidate_features(const TopoMap& map, std::size_t cap, Rng& rng) {
  std::vector<std::size_t> idx(map.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  if (idx.size() > cap) {
    for (std::size_t i = 0; i < cap; ++i) std::swap(idx[i], idx[i + rng.below(idx.size() - i)]);
    idx.resize(cap);
    std::sort(idx.begin(), idx.end());
  }
  std::vector<ActionFeature> out;
  out.reserve(idx.size());
  for (std::size_t i : idx) out.push_back(action_feature(map.nodes()[i].appearance));
  return out;
}

enum class ActionRule { QGreedy, UniformRandom };

struct EpisodeOptions {
  ActionRule rule = ActionRule::QGreedy;
  double epsilon = 0.05;
  double bonus = 1.0;
  Learner* learner = nullptr;  // non-null: push transitions and train
  TopoMap* final_map = nullptr;
  std::vector<TraceEvent>* trace = nullptr;
};

struct EpisodeResult {
  std::uint64_t scene_seed = 0;
  int macro_steps = 0;
  long elementary_steps = 0;
  double total_reward = 0.0;
  bool success = false;
  double wall_time = 0.0;  // seconds; never written to deterministic outputs
  double mean_loss = 0.0;
  int train_steps = 0;
};

/// One episode: fresh map, bootstrap scan, then macro actions until the task
/// is done or macro_cap is hit.
inline EpisodeResult run_episode(const GridScene& scene, const QParams& params, const TrainConfig& cfg, Rng& rng,
                                 const EpisodeOptions& opt = {}) {
  const auto t0 = std::chrono::steady_clock::now();
  EpisodeResult result;
  TopoMap map(cfg.merge_radius, cfg.explored_radius);
  Navigator nav(scene, map, cfg.planner, cfg.scheme, opt.trace != nullptr);
  const int walk_budget = 2 * (scene.width + scene.height);
  nav.bootstrap(rng, walk_budget);

  double loss_sum = 0.0;
  const QParams* policy = opt.learner ? &opt.learner->params : &params;
  while (!nav.done() && result.macro_steps < cfg.macro_cap) {
    if (map.empty()) {
      nav.bootstrap(rng, walk_budget, false);
      ++result.macro_steps;
      continue;
    }
    const auto progress = progress_one_hot(nav.progress().achieved, scene.n_targets);
    NodeId chosen;
    if (opt.rule == ActionRule::UniformRandom) {
      chosen = static_cast<NodeId>(rng.below(map.size()));
    } else {
      const auto qvals = q_all_nodes(*policy, map, progress);
      chosen = select_action(qvals, map.unexplored_ids(), opt.bonus, opt.epsilon, rng);
    }
    auto feature = action_feature(map.node(chosen).appearance);
    const auto outcome = nav.execute_macro({chosen});
    ++result.macro_steps;

    if (opt.learner) {
      Learner& L = *opt.learner;
      Transition t;
      t.action_feature = std::move(feature);
      t.progress = progress;
      t.reward = outcome.reward;
      t.done = outcome.done;
      if (!outcome.done) {
        t.next_progress = progress_one_hot(outcome.progress.achieved, scene.n_targets);
        t.next_candidates = candidate_features(map, cfg.max_candidates, rng);
      } else {
        t.next_progress = progress;
      }
      L.buffer.push(std::move(t));
      if (L.buffer.size() >= cfg.batch_size) {
        const auto batch = L.buffer.sample(cfg.batch_size, rng);
        auto step = td_train_step(L.params, L.target, batch, cfg.gamma, cfg.lr);
        L.params = std::move(step.params);
        loss_sum += step.mean_loss;
        ++result.train_steps;
        ++L.train_steps;
        if (cfg.target_sync_every > 0 && L.train_steps % cfg.target_sync_every == 0) L.target = sync_target(L.params);
      }
    }
  }

  result.elementary_steps = nav.total_steps();
  result.total_reward = nav.total_reward();
  result.success = nav.done();
  result.mean_loss = result.train_steps > 0 ? loss_sum / result.train_steps : 0.0;
  result.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (opt.final_map) *opt.final_map = map;
  if (opt.trace) *opt.trace = nav.trace();
  return result;
}

// ---- metrics -------------------------------------------------------------

struct MetricsRow {
  int episode = 0;
  EpisodeResult result;
  double epsilon = 0.0;
  double bonus = 0.0;
};

inline constexpr const char* kMetricsHeader =
    "episode,scene_seed,macro_steps,elementary_steps,total_reward,success,mean_loss,epsilon,bonus";

inline std::string format_real(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

inline void write_metrics_csv(std::ostream& os, const std::vector<MetricsRow>& rows) {
  os << kMetricsHeader << '\n';
  for (const auto& r : rows)
    os << r.episode << ',' << r.result.scene_seed << ',' << r.result.macro_steps << ',' << r.result.elementary_steps
       << ',' << format_real(r.result.total_reward) << ',' << (r.result.success ? 1 : 0) << ','
       << format_real(r.result.mean_loss) << ',' << format_real(r.epsilon) << ',' << format_real(r.bonus) << '\n';
}

struct MetricsLog {
  std::vector<MetricsRow> rows;
  QParams params;
};

/// Scenes for episode `episode`: the layout of training scene
/// (order[episode % n]) with objects re-placed from a per-episode seed.
inline GridScene training_episode_scene(const TrainConfig& cfg, const std::vector<GridScene>& layouts, int scene_index,
                                        int episode) {
  GridScene scene = layouts[static_cast<std::size_t>(scene_index)];
  place_objects(scene, mix_seed(cfg.seed, static_cast<std::uint64_t>(episode), 0x9ace), cfg.scene);
  return scene;
}

inline std::vector<GridScene> training_scenes(const TrainConfig& cfg) {
  std::vector<GridScene> scenes;
  scenes.reserve(static_cast<std::size_t>(cfg.n_scenes));
  for (int i = 0; i < cfg.n_scenes; ++i) scenes.push_back(generate_scene(training_scene_seed(cfg, i), cfg.scene));
  return scenes;
}

/// Full training run. `on_checkpoint(episode, params)` fires every
/// checkpoint_every episodes when set.
inline MetricsLog train(const TrainConfig& cfg,
                        const std::function<void(int, const QParams&)>& on_checkpoint = {},
                        const std::function<void(const MetricsRow&)>& on_episode = {}) {
  MetricsLog log;
  Learner learner(initial_params(cfg), cfg.buffer_capacity);
  if (cfg.episodes > 0) {
    const auto scenes = training_scenes(cfg);
    Rng rng(mix_seed(cfg.seed, 0x7a1));
    std::vector<int> order(scenes.size());
    for (int ep = 0; ep < cfg.episodes; ++ep) {
      const int slot = ep % cfg.n_scenes;
      if (slot == 0) {
        std::iota(order.begin(), order.end(), 0);
        Rng shuffle(mix_seed(cfg.seed, static_cast<std::uint64_t>(ep / cfg.n_scenes), 0x0e9));
        for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[shuffle.below(i)]);
      }
      const int si = order[static_cast<std::size_t>(slot)];
      const GridScene scene = training_episode_scene(cfg, scenes, si, ep);
      EpisodeOptions opt{ActionRule::QGreedy, cfg.epsilon, cfg.bonus, &learner};
      auto res = run_episode(scene, learner.params, cfg, rng, opt);
      res.scene_seed = training_scene_seed(cfg, si);
      log.rows.push_back({ep, res, cfg.epsilon, cfg.bonus});
      if (on_episode) on_episode(log.rows.back());
      if (on_checkpoint && cfg.checkpoint_every > 0 && (ep + 1) % cfg.checkpoint_every == 0)
        on_checkpoint(ep + 1, learner.params);
    }
  }
  log.params = learner.params;
  return log;
}

// ---- evaluation ------------------------------------------------------------

struct EvalStats {
  int n = 0;
  double mean_macro_steps = 0.0;
  double median_macro_steps = 0.0;
  double mean_elementary_steps = 0.0;
  double median_elementary_steps = 0.0;
  double success_rate = 0.0;
  double mean_reward = 0.0;
};

struct EvalReport {
  std::vector<MetricsRow> rows;
  EvalStats stats;
};

template <typename T>
double median(std::vector<T> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  if (v.size() % 2 == 1) return static_cast<double>(v[m]);
  return (static_cast<double>(v[m - 1]) + static_cast<double>(v[m])) / 2.0;
}

inline EvalStats summarize(const std::vector<MetricsRow>& rows) {
  EvalStats s;
  s.n = static_cast<int>(rows.size());
  if (rows.empty()) return s;
  std::vector<int> macro;
  std::vector<long> elem;
  for (const auto& r : rows) {
    macro.push_back(r.result.macro_steps);
    elem.push_back(r.result.elementary_steps);
    s.mean_macro_steps += r.result.macro_steps;
    s.mean_elementary_steps += static_cast<double>(r.result.elementary_steps);
    s.success_rate += r.result.success ? 1.0 : 0.0;
    s.mean_reward += r.result.total_reward;
  }
  const double n = static_cast<double>(rows.size());
  s.mean_macro_steps /= n;
  s.mean_elementary_steps /= n;
  s.success_rate /= n;
  s.mean_reward /= n;
  s.median_macro_steps = median(macro);
  s.median_elementary_steps = median(elem);
  return s;
}

inline void write_summary(std::ostream& os, const EvalStats& s) {
  os << "n_eval " << s.n << '\n'
     << "mean_macro_steps " << format_real(s.mean_macro_steps) << '\n'
     << "median_macro_steps " << format_real(s.median_macro_steps) << '\n'
     << "mean_elementary_steps " << format_real(s.mean_elementary_steps) << '\n'
     << "median_elementary_steps " << format_real(s.median_elementary_steps) << '\n'
     << "success_rate " << format_real(s.success_rate) << '\n'
     << "mean_reward " << format_real(s.mean_reward) << '\n';
}

enum class EvalScenes { HeldOut, Training };

struct EvalEpisode {
  std::uint64_t scene_seed = 0;
  GridScene scene;
};

/// Scenes for evaluation episode i: fresh held-out scenes, or the training
/// layouts with placements drawn from an evaluation-only seed stream.
inline std::vector<EvalEpisode> evaluation_scenes(const TrainConfig& cfg, int n_eval, EvalScenes which) {
  std::vector<EvalEpisode> out;
  out.reserve(static_cast<std::size_t>(std::max(n_eval, 0)));
  if (which == EvalScenes::HeldOut) {
    for (int i = 0; i < n_eval; ++i) {
      const auto seed = heldout_scene_seed(cfg, i);
      out.push_back({seed, generate_scene(seed, cfg.scene)});
    }
  } else {
    const auto layouts = training_scenes(cfg);
    for (int i = 0; i < n_eval; ++i) {
      const int si = i % cfg.n_scenes;
      GridScene scene = layouts[static_cast<std::size_t>(si)];
      place_objects(scene, mix_seed(cfg.seed, static_cast<std::uint64_t>(i), 0xe7a1), cfg.scene);
      out.push_back({training_scene_seed(cfg, si), std::move(scene)});
    }
  }
  return out;
}

inline EvalReport evaluate_on(const QParams& params, const TrainConfig& cfg, const std::vector<EvalEpisode>& episodes,
                              ActionRule rule) {
  EvalReport report;
  for (std::size_t i = 0; i < episodes.size(); ++i) {
    Rng rng(mix_seed(cfg.seed, i, 0xe9a1));
    EpisodeOptions opt{rule, 0.0, cfg.bonus, nullptr};
    auto res = run_episode(episodes[i].scene, params, cfg, rng, opt);
    res.scene_seed = episodes[i].scene_seed;
    report.rows.push_back({static_cast<int>(i), res, 0.0, rule == ActionRule::QGreedy ? cfg.bonus : 0.0});
  }
  report.stats = summarize(report.rows);
  return report;
}

/// Frozen greedy policy (epsilon = 0, configured bonus).
inline EvalReport evaluate(const QParams& params, const TrainConfig& cfg, int n_eval,
                           EvalScenes which = EvalScenes::HeldOut) {
  if (n_eval < 1) throw Error(ErrorKind::InvalidArgument, "n_eval must be >= 1");
  return evaluate_on(params, cfg, evaluation_scenes(cfg, n_eval, which), ActionRule::QGreedy);
}

/// Same protocol, actions uniform over the current map nodes.
inline EvalReport random_baseline(const TrainConfig& cfg, int n_eval, EvalScenes which = EvalScenes::HeldOut) {
  if (n_eval < 1) throw Error(ErrorKind::InvalidArgument, "n_eval must be >= 1");
  return evaluate_on(initial_params(cfg), cfg, evaluation_scenes(cfg, n_eval, which), ActionRule::UniformRandom);
}

}  // namespace topomacro
