// topo-macro: command-line front end for training, evaluation, baselines,
// scene generation, map dumps and learning-curve plots.

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <topomacro/topomacro.hpp>

namespace fs = std::filesystem;
using namespace topomacro;

namespace {

/// Tracks every file a subcommand writes so a failure can remove them.
class OutputSet {
 public:
  explicit OutputSet(fs::path dir) : dir_(std::move(dir)) {}

  fs::path path(const std::string& name) const { return dir_ / name; }

  std::ofstream open(const std::string& name, bool binary = false) {
    fs::create_directories(dir_);
    const auto p = path(name);
    written_.push_back(p);
    std::ofstream os(p, binary ? std::ios::binary : std::ios::out);
    if (!os) throw Error(ErrorKind::IoError, "cannot write " + p.string());
    return os;
  }

  void close(std::ofstream& os, const std::string& name) {
    os.close();
    if (!os) throw Error(ErrorKind::IoError, "failed writing " + path(name).string());
  }

  void discard() {
    std::error_code ec;
    for (const auto& p : written_) fs::remove(p, ec);
  }

 private:
  fs::path dir_;
  std::vector<fs::path> written_;
};

void write_text(OutputSet& out, const std::string& name, const std::function<void(std::ostream&)>& body) {
  auto os = out.open(name);
  body(os);
  out.close(os, name);
}

QParams load_params(const RunConfig& cfg) {
  if (cfg.checkpoint.empty()) return initial_params(cfg.train);
  std::ifstream in(cfg.checkpoint, std::ios::binary);
  if (!in) throw Error(ErrorKind::MissingFile, "cannot open checkpoint '" + cfg.checkpoint + "'");
  QParams p = read_checkpoint(in);
  if (p.d_a != cfg.train.feature_size() || p.d_p != cfg.train.progress_size() || p.hidden != cfg.train.hidden)
    throw Error(ErrorKind::ShapeMismatch, "checkpoint shape does not match the configuration");
  return p;
}

int cmd_train(const RunConfig& cfg, OutputSet& out) {
  auto save = [&](const std::string& name, const QParams& p) {
    auto os = out.open(name, true);
    write_checkpoint(os, p);
    out.close(os, name);
  };
  const auto log = train(cfg.train, [&](int ep, const QParams& p) { save("checkpoint_" + std::to_string(ep) + ".qnet", p); });
  write_text(out, "metrics.csv", [&](std::ostream& os) { write_metrics_csv(os, log.rows); });
  save("final.qnet", log.params);
  std::cout << "trained " << log.rows.size() << " episodes -> " << out.path("metrics.csv").string() << '\n';
  return 0;
}

int cmd_evaluate(const RunConfig& cfg, OutputSet& out, bool baseline) {
  const auto report = baseline ? random_baseline(cfg.train, cfg.n_eval, cfg.eval_scenes)
                               : evaluate(load_params(cfg), cfg.train, cfg.n_eval, cfg.eval_scenes);
  const std::string prefix = baseline ? "baseline" : "eval";
  write_text(out, prefix + "_episodes.csv", [&](std::ostream& os) { write_metrics_csv(os, report.rows); });
  write_text(out, prefix + "_summary.txt", [&](std::ostream& os) { write_summary(os, report.stats); });
  write_summary(std::cout, report.stats);
  return 0;
}

int cmd_gen_scene(const RunConfig& cfg, OutputSet& out) {
  const auto scene = generate_scene(cfg.scene_seed, cfg.train.scene);
  const auto name = "scene_" + std::to_string(cfg.scene_seed) + ".txt";
  write_text(out, name, [&](std::ostream& os) { write_scene(os, scene); });
  std::cout << out.path(name).string() << '\n';
  return 0;
}

int cmd_dump_map(const RunConfig& cfg, OutputSet& out) {
  const auto scene = generate_scene(cfg.scene_seed, cfg.train.scene);
  const auto params = load_params(cfg);
  Rng rng(mix_seed(cfg.train.seed, cfg.scene_seed, 0xd0));
  TopoMap map;
  std::vector<TraceEvent> trace;
  EpisodeOptions opt{ActionRule::QGreedy, 0.0, cfg.train.bonus, nullptr, &map, &trace};
  run_episode(scene, params, cfg.train, rng, opt);
  const auto suffix = std::to_string(cfg.scene_seed) + ".txt";
  write_text(out, "map_" + suffix, [&](std::ostream& os) { map.write(os); });
  write_text(out, "trace_" + suffix, [&](std::ostream& os) { write_trace(os, trace); });
  std::cout << out.path("map_" + suffix).string() << '\n';
  return 0;
}

/// Series metadata comes from the resolved.cfg next to each CSV when present.
PlotSeries load_series(const std::string& csv) {
  std::ifstream in(csv);
  if (!in) throw Error(ErrorKind::MissingFile, "cannot open metrics '" + csv + "'");
  PlotSeries s;
  s.macro_steps = read_macro_steps(in);
  const fs::path p(csv);
  s.label = p.parent_path().filename().string();
  if (s.label.empty()) s.label = p.stem().string();
  const auto resolved = p.parent_path() / "resolved.cfg";
  if (fs::exists(resolved)) {
    RunConfig run = default_config();
    apply_config_file(run, resolved.string());
    s.n_targets = run.train.scene.n_targets;
    s.scheme = run.train.scheme;
    s.macro_cap = run.train.macro_cap;
  }
  return s;
}

int cmd_plot(const RunConfig&, OutputSet& out, const std::vector<std::string>& inputs) {
  std::vector<PlotSeries> series;
  for (const auto& csv : inputs) series.push_back(load_series(csv));
  write_text(out, "learning_curves.svg", [&](std::ostream& os) { write_learning_curves_svg(os, series); });
  std::cout << out.path("learning_curves.svg").string() << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Object-oriented macro-action RL over topological maps"};
  app.require_subcommand(1);

  struct Sub {
    CLI::App* app;
    std::string config_path;
    std::map<std::string, std::string> values;
    std::map<std::string, CLI::Option*> options;
    std::vector<std::string> inputs;
  };
  const RunConfig defaults = default_config();
  const std::vector<std::pair<std::string, std::string>> commands{
      {"train", "train the Q network; writes metrics.csv and checkpoints"},
      {"eval", "evaluate a checkpoint with the frozen greedy policy"},
      {"baseline", "evaluate the uniform-random macro policy"},
      {"gen-scene", "write a generated scene in the scene v1 format"},
      {"dump-map", "replay one episode and write its topological map and trace"},
      {"plot", "plot smoothed macro steps per episode from metrics CSVs"},
  };
  std::vector<Sub> subs;
  subs.reserve(commands.size());
  for (const auto& [name, help] : commands) {
    Sub& s = subs.emplace_back();
    s.app = app.add_subcommand(name, help);
    s.app->add_option("-c,--config", s.config_path, "config file of 'key = value' lines")->type_name("FILE");
    for (const auto& key : config_keys())
      s.options[key.name] =
          s.app->add_option("--" + key.name, s.values[key.name], key.help + " [default: " + key.get(defaults) + "]")
              ->type_name("VALUE");
    if (name == "plot") s.app->add_option("inputs", s.inputs, "metrics CSV files")->required();
  }

  CLI11_PARSE(app, argc, argv);

  for (auto& s : subs) {
    if (!s.app->parsed()) continue;
    const std::string name = s.app->get_name();
    std::unique_ptr<OutputSet> out;
    try {
      std::vector<std::pair<std::string, std::string>> flags;
      for (const auto& key : config_keys())
        if (s.options[key.name]->count() > 0) flags.emplace_back(key.name, s.values[key.name]);
      const RunConfig cfg = parse_config(s.config_path, flags, std::getenv("TOPO_MACRO_OUT"));
      out = std::make_unique<OutputSet>(cfg.out_dir);
      write_text(*out, "resolved.cfg", [&](std::ostream& os) { write_resolved(os, cfg); });
      if (name == "train") return cmd_train(cfg, *out);
      if (name == "eval") return cmd_evaluate(cfg, *out, false);
      if (name == "baseline") return cmd_evaluate(cfg, *out, true);
      if (name == "gen-scene") return cmd_gen_scene(cfg, *out);
      if (name == "dump-map") return cmd_dump_map(cfg, *out);
      if (name == "plot") return cmd_plot(cfg, *out, s.inputs);
    } catch (const std::exception& e) {
      if (out) out->discard();
      std::cerr << "topo-macro " << name << ": " << e.what() << '\n';
      return 1;
    }
  }
  return 1;
}
