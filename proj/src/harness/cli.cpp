#include "tua/harness/cli.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <optional>

#include "tua/baselines.hpp"
#include "tua/error.hpp"
#include "tua/harness/config.hpp"
#include "tua/harness/eval.hpp"
#include "tua/harness/output.hpp"

namespace tua::harness {

namespace fs = std::filesystem;

namespace {

struct Common {
  std::string config;
  std::string preset = "default";
  std::string out;
  std::uint64_t seed = 0;
};

ExperimentConfig base_config(const Common& c) {
  if (!c.config.empty()) return load_config(c.config);
  if (c.preset == "reduced") return reduced_config();
  if (c.preset == "default") return default_config();
  throw ConfigError("unknown preset '" + c.preset + "'");
}

void add_common(CLI::App* app, Common& c) {
  app->add_option("--config", c.config, "INI experiment config");
  app->add_option("--preset", c.preset, "built-in config when --config is absent")
      ->check(CLI::IsMember({"default", "reduced"}));
  app->add_option("--out", c.out, "output directory (default $TUA_OUT_DIR or ./out)");
  app->add_option("--seed", c.seed, "root seed");
}

struct Loaded {
  ExperimentConfig config;
  PolicyNetwork policy;
};

// The checkpoint carries the config it was trained with; --config overrides it.
Loaded load_policy(const std::string& path, const Common& common) {
  const nn::Checkpoint ckpt = nn::load_checkpoint(path);
  ExperimentConfig cfg;
  if (!common.config.empty()) {
    cfg = load_config(common.config);
  } else if (ckpt.meta.contains("config_ini")) {
    cfg = parse_config(ckpt.meta["config_ini"].get<std::string>());
  } else {
    cfg = base_config(common);
  }
  PolicyNetwork policy(cfg.train.policy);
  if (!policy.params().same_shapes(ckpt.params))
    throw Error("checkpoint " + path + " does not match the configured policy architecture");
  policy.params() = ckpt.params;
  return {cfg, policy};
}

void write_manifest(const fs::path& dir, const Manifest& m) { write_text(dir / "manifest.json", m.doc.dump(2) + "\n"); }

Table sweep_table(std::span<const EvalSummary> rows, const std::string& hash) {
  Table t;
  t.comments.push_back("manifest " + hash);
  t.columns = {"k", "n_i", "policy", "policy_ci95", "max_snr", "max_snr_ci95", "heuristic", "heuristic_ci95",
               "gain_vs_max_snr", "gain_vs_heuristic"};
  for (const auto& s : rows) {
    const auto& p = s.method("policy");
    const auto& m = s.method("max_snr");
    const auto& h = s.method("heuristic");
    const auto gain = [](double a, double b) { return b != 0.0 ? (a - b) / std::abs(b) : 0.0; };
    t.rows.push_back({static_cast<double>(s.k), static_cast<double>(s.n_i), p.mean_utility_bps, p.ci95,
                      m.mean_utility_bps, m.ci95, h.mean_utility_bps, h.ci95,
                      gain(p.mean_utility_bps, m.mean_utility_bps), gain(p.mean_utility_bps, h.mean_utility_bps)});
  }
  return t;
}

void print_summary(const EvalSummary& s) {
  for (const auto& m : s.methods)
    std::cout << "K=" << s.k << " N_i=" << s.n_i << " " << m.method << " mean=" << m.mean_utility_bps
              << " ci95=" << m.ci95 << "\n";
}

int cmd_train(const Common& common, std::size_t episodes, std::size_t checkpoint_every) {
  ExperimentConfig cfg = base_config(common);
  const fs::path dir = resolve_outdir(common.out);
  ensure_writable(dir);
  const auto cfg_json = to_json(cfg);
  nlohmann::json outputs = {{"metrics", "metrics.csv"}, {"checkpoint", "policy.ckpt"}, {"plot", "reward.svg"}};
  const Manifest manifest = make_manifest(cfg_json, {{"root", common.seed}}, "train", outputs);
  const std::string hash = manifest.hash();
  const nlohmann::json meta = {{"config_ini", to_ini(cfg)}, {"manifest", hash}, {"seed", common.seed}};

  const auto on_episode = [&](const EpisodeMetrics& m, const PolicyNetwork& policy) {
    if (checkpoint_every > 0 && (m.episode + 1) % checkpoint_every == 0)
      nn::save_checkpoint(dir / ("policy_" + std::to_string(m.episode + 1) + ".ckpt"), policy.params(), meta);
    if ((m.episode + 1) % 100 == 0)
      std::cerr << "episode " << m.episode + 1 << " reward " << m.mean_reward << " r_d " << m.r_d << "\n";
  };
  const TrainResult result = train(cfg.train, episodes, common.seed, on_episode);
  nn::save_checkpoint(dir / "policy.ckpt", result.policy.params(), meta);
  write_text(dir / "metrics.csv", metrics_csv(result.metrics, hash));
  write_manifest(dir, manifest);
  if (!result.metrics.empty()) plot_csv(dir / "metrics.csv", dir / "reward.svg");
  std::cout << "wrote " << (dir / "metrics.csv").string() << " and " << (dir / "policy.ckpt").string() << "\n";
  return 0;
}

int run_sweep(const std::string& command, const Loaded& loaded, const Common& common, EvalOptions options,
              std::span<const std::size_t> ks, std::span<const int> beams) {
  const fs::path dir = resolve_outdir(common.out);
  ensure_writable(dir);
  const auto summaries = run_transfer_eval(loaded.policy, loaded.config.train.env, ks, beams, options);
  const Manifest manifest = make_manifest(to_json(loaded.config), {{"eval", options.seed}}, command,
                                          {{"summary", command + ".json"}, {"table", command + ".csv"},
                                           {"plot", command + ".svg"}});
  const std::string hash = manifest.hash();
  nlohmann::json doc = {{"manifest", hash}, {"rows", summary_rows(summaries)}};
  write_text(dir / (command + ".json"), doc.dump(2) + "\n");
  write_text(dir / (command + ".csv"), to_csv(sweep_table(summaries, hash)));
  write_manifest(dir, manifest);
  plot_csv(dir / (command + ".csv"), dir / (command + ".svg"));
  for (const auto& s : summaries) print_summary(s);
  return 0;
}

}  // namespace

int run_cli(int argc, char** argv) {
  CLI::App app{"User association simulator, attention policy and PPO trainer"};
  app.require_subcommand(1);

  Common common;
  std::size_t episodes = 100, checkpoint_every = 0;
  auto* train_cmd = app.add_subcommand("train", "train a policy");
  add_common(train_cmd, common);
  train_cmd->add_option("--episodes", episodes, "training episodes");
  train_cmd->add_option("--checkpoint-every", checkpoint_every, "extra checkpoint period (0 = final only)");

  std::string checkpoint;
  std::optional<std::size_t> k_flag;
  std::optional<int> beams_flag;
  std::optional<std::size_t> deployments;
  std::optional<double> alpha;
  std::optional<std::string> traffic;
  std::optional<int> steps;
  bool greedy = false;
  const auto add_eval = [&](CLI::App* cmd, bool needs_ckpt) {
    add_common(cmd, common);
    if (needs_ckpt) cmd->add_option("--checkpoint", checkpoint, "trained policy")->required();
    cmd->add_option("--deployments", deployments, "evaluated deployments");
    cmd->add_option("--alpha", alpha, "utility fairness exponent");
    cmd->add_option("--traffic", traffic, "poisson|infinite");
    cmd->add_option("--steps", steps, "steps per deployment");
    cmd->add_flag("--greedy", greedy, "act with the argmax action");
  };
  auto* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint");
  add_eval(eval_cmd, true);
  eval_cmd->add_option("--k", k_flag, "number of UEs");
  eval_cmd->add_option("--beams", beams_flag, "beams per SBS");

  std::vector<std::size_t> ks{10, 15, 20, 25, 30};
  auto* sweep_k = app.add_subcommand("sweep-k", "zero-shot sweep over the number of UEs");
  add_eval(sweep_k, true);
  sweep_k->add_option("--ks", ks, "UE counts");
  sweep_k->add_option("--beams", beams_flag, "beams per SBS");

  std::vector<int> beam_list{2, 3, 4, 5, 10, 15};
  std::size_t sweep_beams_k = 15;
  auto* sweep_b = app.add_subcommand("sweep-beams", "zero-shot sweep over the beam budget");
  add_eval(sweep_b, true);
  sweep_b->add_option("--beam-list", beam_list, "beam budgets");
  sweep_b->add_option("--k", sweep_beams_k, "number of UEs");

  auto* base_cmd = app.add_subcommand("baseline", "max-SNR and heuristic baselines only");
  add_eval(base_cmd, false);
  base_cmd->add_option("--k", k_flag, "number of UEs");
  base_cmd->add_option("--beams", beams_flag, "beams per SBS");

  std::size_t instances = 200, max_k = 6;
  std::uint64_t check_seed = 0;
  auto* oracle_cmd = app.add_subcommand("oracle-check", "max-SNR <= heuristic <= exact oracle on tiny instances");
  oracle_cmd->add_option("--instances", instances, "random instances");
  oracle_cmd->add_option("--max-k", max_k, "largest UE count")->check(CLI::Range(2, 8));
  oracle_cmd->add_option("--seed", check_seed, "root seed");

  std::size_t coords = 200;
  auto* grad_cmd = app.add_subcommand("gradcheck", "finite-difference check of the PPO loss gradient");
  grad_cmd->add_option("--coordinates", coords, "checked coordinates");
  grad_cmd->add_option("--seed", check_seed, "root seed");

  std::string plot_in, plot_out;
  auto* plot_cmd = app.add_subcommand("plot", "render a metrics or sweep CSV as SVG");
  plot_cmd->add_option("--in", plot_in, "input CSV")->required();
  plot_cmd->add_option("--out", plot_out, "output SVG")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  const auto eval_options = [&](const ExperimentConfig& cfg) {
    EvalOptions o = cfg.eval;
    o.seed = common.seed;
    if (deployments) o.deployments = *deployments;
    if (steps) o.steps = *steps;
    if (greedy) o.greedy = true;
    return o;
  };
  const auto apply_env_flags = [&](ExperimentConfig& cfg) {
    if (alpha) cfg.train.env.alpha = *alpha;
    if (traffic) cfg.train.env.traffic.mode = parse_traffic_mode(*traffic);
  };

  try {
    if (*train_cmd) return cmd_train(common, episodes, checkpoint_every);

    if (*eval_cmd || *sweep_k || *sweep_b) {
      Loaded loaded = load_policy(checkpoint, common);
      apply_env_flags(loaded.config);
      const EvalOptions options = eval_options(loaded.config);
      const std::size_t k0 = loaded.config.train.n_ue;
      if (*eval_cmd) {
        const std::size_t k = k_flag.value_or(k0);
        std::vector<int> beams;
        if (beams_flag) beams.push_back(*beams_flag);
        return run_sweep("eval", loaded, common, options, std::span<const std::size_t>(&k, 1), beams);
      }
      if (*sweep_k) {
        std::vector<int> beams;
        if (beams_flag) beams.push_back(*beams_flag);
        return run_sweep("sweep_k", loaded, common, options, ks, beams);
      }
      return run_sweep("sweep_beams", loaded, common, options, std::span<const std::size_t>(&sweep_beams_k, 1),
                       beam_list);
    }

    if (*base_cmd) {
      ExperimentConfig cfg = base_config(common);
      apply_env_flags(cfg);
      if (beams_flag) cfg.train.env.network.set_uniform_beams(*beams_flag);
      const EvalOptions options = eval_options(cfg);
      // The policy column is an untrained network; only the baselines are reported.
      PolicyNetwork policy(cfg.train.policy);
      Rng init = make_stream(common.seed, {kInitStream});
      policy.initialize(init);
      const EvalSummary s = evaluate(policy, cfg.train.env, k_flag.value_or(cfg.train.n_ue), options);
      for (const auto& m : s.methods)
        if (m.method != "policy")
          std::cout << "K=" << s.k << " N_i=" << s.n_i << " " << m.method << " mean=" << m.mean_utility_bps
                    << " ci95=" << m.ci95 << "\n";
      return 0;
    }

    if (*oracle_cmd) {
      const auto report = oracle_check(instances, check_seed, max_k);
      std::cout << "ordered " << report.ordered << "/" << report.cases.size() << ", heuristic >= 95% of oracle on "
                << report.within_95 << "/" << report.cases.size() << "\n";
      return report.ordered == report.cases.size() ? 0 : 1;
    }

    if (*grad_cmd) {
      const auto r = ppo_gradient_check(check_seed, coords);
      std::cout << "checked " << r.checked << " coordinates, max relative error " << r.max_rel_error << "\n";
      return r.passed ? 0 : 1;
    }

    if (*plot_cmd) {
      if (!plot_csv(plot_in, plot_out)) {
        std::cerr << "error: " << plot_in << " has no data rows\n";
        return 1;
      }
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}

}  // namespace tua::harness
