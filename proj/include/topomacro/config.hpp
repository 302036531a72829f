#pragma once

// Run configuration: `key = value` files, flag overrides, provenance
// tracking and the resolved echo written next to every run's outputs.

#include <charconv>
#include <cstdlib>
#include <stdexcept>
#include <type_traits>
#include <cstdint>
#include <fstream>
#include <functional>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "error.hpp"
#include "trainer.hpp"

namespace topomacro {

enum class ConfigSource { Default, File, Env, Flag };

inline std::string_view to_string(ConfigSource s) {
  switch (s) {
    case ConfigSource::Default: return "default";
    case ConfigSource::File: return "file";
    case ConfigSource::Env: return "env";
    case ConfigSource::Flag: return "flag";
  }
  return "?";
}

struct RunConfig {
  TrainConfig train;
  std::string out_dir = "out";
  std::string checkpoint;  // eval / dump-map input; empty means freshly initialized params
  int n_eval = 100;
  std::uint64_t scene_seed = 0;
  EvalScenes eval_scenes = EvalScenes::HeldOut;

  std::map<std::string, ConfigSource> provenance;
};

struct ConfigKey {
  std::string name;
  std::string help;
  std::function<void(RunConfig&, std::string_view)> set;  // throws std::invalid_argument on bad text
  std::function<std::string(const RunConfig&)> get;
};

namespace detail {

template <typename T>
T parse_number(std::string_view text) {
  T value{};
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc{} || ptr != end) throw std::invalid_argument(std::string(text));
  return value;
}

// from_chars for double is incomplete on some toolchains; strtod is exact enough here.
template <>
inline double parse_number<double>(std::string_view text) {
  std::string s(text);
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size()) throw std::invalid_argument(s);
  return v;
}

inline bool parse_bool(std::string_view text) {
  if (text == "true" || text == "1" || text == "yes" || text == "on") return true;
  if (text == "false" || text == "0" || text == "no" || text == "off") return false;
  throw std::invalid_argument(std::string(text));
}

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

template <typename Get>
ConfigKey make_key(std::string name, std::string help, Get member) {
  using T = std::remove_reference_t<decltype(member(std::declval<RunConfig&>()))>;
  ConfigKey k;
  k.name = std::move(name);
  k.help = std::move(help);
  k.set = [member](RunConfig& c, std::string_view text) {
    if constexpr (std::is_same_v<T, bool>) member(c) = parse_bool(text);
    else if constexpr (std::is_same_v<T, std::string>) member(c) = std::string(text);
    else member(c) = parse_number<T>(text);
  };
  k.get = [member](const RunConfig& c) {
    auto& v = member(const_cast<RunConfig&>(c));
    if constexpr (std::is_same_v<T, bool>) return std::string(v ? "true" : "false");
    else if constexpr (std::is_same_v<T, std::string>) return v;
    else if constexpr (std::is_floating_point_v<T>) return format_real(v);
    else return std::to_string(v);
  };
  return k;
}

inline ConfigKey enum_key(std::string name, std::string help, std::function<void(RunConfig&, std::string_view)> set,
                          std::function<std::string(const RunConfig&)> get) {
  return ConfigKey{std::move(name), std::move(help), std::move(set), std::move(get)};
}

}  // namespace detail

/// Every accepted configuration key, in help/echo order.
inline const std::vector<ConfigKey>& config_keys() {
  using detail::make_key;
  static const std::vector<ConfigKey> keys = [] {
    std::vector<ConfigKey> k;
#define TM_KEY(name, help, expr) k.push_back(make_key(name, help, [](RunConfig& c) -> auto& { return expr; }))
    // scene
    TM_KEY("width", "grid width in cells (>= 8)", c.train.scene.width);
    TM_KEY("height", "grid height in cells (>= 8)", c.train.scene.height);
    TM_KEY("n_objects", "objects per scene, targets included", c.train.scene.n_objects);
    TM_KEY("n_targets", "sequential targets per episode (1..3)", c.train.scene.n_targets);
    TM_KEY("patch_size", "appearance patch side P (P x P x 3 values)", c.train.scene.patch_size);
    TM_KEY("obstacle_density", "probability of a pillar wall per interior cell", c.train.scene.obstacle_density);
    TM_KEY("target_jitter", "per-pixel color noise stddev of object patches", c.train.scene.target_jitter);
    TM_KEY("door_width", "doorway width in cells", c.train.scene.door_width);
    TM_KEY("min_object_spacing", "minimum Chebyshev distance between objects", c.train.scene.min_object_spacing);
    TM_KEY("discoverable_range", "range for the target discoverability check (0 disables)", c.train.scene.discoverable_range);
    TM_KEY("hide_targets_from_start", "reject placements with a target visible from the start", c.train.scene.hide_targets_from_start);
    TM_KEY("max_retries", "object placement attempts before GenerationFailed", c.train.scene.max_retries);
    // sensor
    TM_KEY("fov_halfwidth_deg", "field-of-view half width in degrees", c.train.planner.sensor.fov_halfwidth_deg);
    TM_KEY("sensor_range", "detection range in cells (Chebyshev)", c.train.planner.sensor.range);
    TM_KEY("position_noise", "detection position noise stddev in cells", c.train.planner.sensor.position_noise);
    // map / planner
    TM_KEY("merge_radius", "detections within this radius reuse a node", c.train.merge_radius);
    TM_KEY("explored_radius", "nodes within this radius of the agent become explored", c.train.explored_radius);
    TM_KEY("goal_radius", "Chebyshev radius at which a target counts as reached", c.train.planner.goal_radius);
    TM_KEY("hop_budget", "elementary steps per graph hop (0: 4*(w+h))", c.train.planner.hop_budget);
    TM_KEY("macro_budget", "elementary steps per macro action (0: 4*(w+h))", c.train.planner.macro_budget);
    TM_KEY("arrival_scan", "look around on first arrival at a macro target", c.train.planner.arrival_scan);
    // training
    k.push_back(detail::enum_key(
        "scheme", "reward scheme: intermediate | terminal",
        [](RunConfig& c, std::string_view v) {
          if (v == "intermediate") c.train.scheme = RewardScheme::Intermediate;
          else if (v == "terminal") c.train.scheme = RewardScheme::Terminal;
          else throw std::invalid_argument(std::string(v));
        },
        [](const RunConfig& c) {
          return std::string(c.train.scheme == RewardScheme::Intermediate ? "intermediate" : "terminal");
        }));
    TM_KEY("n_scenes", "training scene layouts", c.train.n_scenes);
    TM_KEY("macro_cap", "macro actions per episode", c.train.macro_cap);
    TM_KEY("gamma", "discount per macro action", c.train.gamma);
    TM_KEY("lr", "SGD learning rate", c.train.lr);
    TM_KEY("buffer_capacity", "replay buffer capacity", c.train.buffer_capacity);
    TM_KEY("batch_size", "transitions per train step", c.train.batch_size);
    TM_KEY("target_sync_every", "train steps between target network syncs", c.train.target_sync_every);
    TM_KEY("bonus", "Q bonus for unexplored nodes at selection time", c.train.bonus);
    TM_KEY("epsilon", "epsilon-greedy rate during training", c.train.epsilon);
    TM_KEY("episodes", "training episodes", c.train.episodes);
    TM_KEY("seed", "master seed", c.train.seed);
    TM_KEY("hidden", "hidden units of the Q network", c.train.hidden);
    TM_KEY("max_candidates", "next-state candidate features stored per transition", c.train.max_candidates);
    TM_KEY("checkpoint_every", "episodes between checkpoints (0: final only)", c.train.checkpoint_every);
    // io / subcommands
    TM_KEY("out_dir", "output directory (env TOPO_MACRO_OUT overrides the file value)", c.out_dir);
    TM_KEY("checkpoint", "Q network checkpoint for eval and dump-map", c.checkpoint);
    TM_KEY("n_eval", "evaluation episodes", c.n_eval);
    TM_KEY("scene_seed", "scene seed for gen-scene and dump-map", c.scene_seed);
#undef TM_KEY
    k.push_back(detail::enum_key(
        "eval_scenes", "scenes for eval/baseline: heldout | training",
        [](RunConfig& c, std::string_view v) {
          if (v == "heldout") c.eval_scenes = EvalScenes::HeldOut;
          else if (v == "training") c.eval_scenes = EvalScenes::Training;
          else throw std::invalid_argument(std::string(v));
        },
        [](const RunConfig& c) { return std::string(c.eval_scenes == EvalScenes::HeldOut ? "heldout" : "training"); }));
    return k;
  }();
  return keys;
}

inline const ConfigKey* find_key(std::string_view name) {
  for (const auto& k : config_keys())
    if (k.name == name) return &k;
  return nullptr;
}

inline RunConfig default_config() {
  RunConfig c;
  for (const auto& k : config_keys()) c.provenance[k.name] = ConfigSource::Default;
  return c;
}

inline void apply_value(RunConfig& cfg, std::string_view key, std::string_view value, ConfigSource source,
                        const std::string& where) {
  const ConfigKey* k = find_key(key);
  if (!k) throw Error(ErrorKind::UnknownKey, "unknown key '" + std::string(key) + "'" + where);
  try {
    k->set(cfg, value);
  } catch (const std::invalid_argument&) {
    throw Error(ErrorKind::TypeError, "key '" + std::string(key) + "'" + where + ": cannot parse '" +
                                          std::string(value) + "'");
  }
  cfg.provenance[k->name] = source;
}

/// Applies `key = value` lines; `#` starts a comment.
inline void apply_config_text(RunConfig& cfg, std::string_view text, const std::string& origin = "<string>") {
  std::size_t line_no = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    const std::string where = " (" + origin + ":" + std::to_string(line_no) + ")";
    if (eq == std::string_view::npos)
      throw Error(ErrorKind::ParseError, "expected 'key = value'" + where);
    apply_value(cfg, detail::trim(line.substr(0, eq)), detail::trim(line.substr(eq + 1)), ConfigSource::File, where);
  }
}

inline void apply_config_file(RunConfig& cfg, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::MissingFile, "cannot open config '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  apply_config_text(cfg, buf.str(), path);
}

/// defaults < file < TOPO_MACRO_OUT (out_dir only) < flags.
inline RunConfig parse_config(const std::string& path, const std::vector<std::pair<std::string, std::string>>& flags,
                              const char* env_out_dir = nullptr) {
  RunConfig cfg = default_config();
  if (!path.empty()) apply_config_file(cfg, path);
  if (env_out_dir != nullptr && *env_out_dir != '\0') apply_value(cfg, "out_dir", env_out_dir, ConfigSource::Env, " (env)");
  for (const auto& [k, v] : flags) apply_value(cfg, k, v, ConfigSource::Flag, " (flag --" + k + ")");
  return cfg;
}

inline void write_resolved(std::ostream& os, const RunConfig& cfg) {
  for (const auto& k : config_keys()) {
    const auto it = cfg.provenance.find(k.name);
    const auto src = it == cfg.provenance.end() ? ConfigSource::Default : it->second;
    os << k.name << " = " << k.get(cfg) << "  # " << to_string(src) << '\n';
  }
}

}  // namespace topomacro
