#include "tua/harness/config.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "tua/error.hpp"

namespace tua::harness {

namespace pt = boost::property_tree;

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

std::vector<double> parse_list(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    try {
      out.push_back(std::stod(item, &used));
    } catch (const std::exception&) {
      throw ConfigError("malformed number in list: '" + s + "'");
    }
  }
  return out;
}

std::string join(const std::vector<double>& v) {
  std::ostringstream os;
  os.precision(17);
  for (std::size_t i = 0; i < v.size(); ++i) os << (i ? "," : "") << v[i];
  return os.str();
}

template <class T>
T get(const pt::ptree& tree, const std::string& key, T fallback) {
  const auto node = tree.get_child_optional(pt::ptree::path_type(key, '.'));
  if (!node) return fallback;
  try {
    return node->get_value<T>();
  } catch (const pt::ptree_error&) {
    throw ConfigError("bad value for " + key + ": '" + node->data() + "'");
  }
}

void read_radio(const pt::ptree& tree, const std::string& sec, RadioParams& p) {
  p.carrier_hz = get(tree, sec + ".carrier_hz", p.carrier_hz);
  p.bandwidth_hz = get(tree, sec + ".bandwidth_hz", p.bandwidth_hz);
  p.tx_power_w = dbm_to_watts(get(tree, sec + ".tx_power_dbm", watts_to_dbm(p.tx_power_w)));
  p.noise_psd_w_per_hz = dbm_to_watts(get(tree, sec + ".noise_psd_dbm_hz", watts_to_dbm(p.noise_psd_w_per_hz)));
  p.noise_figure_db = get(tree, sec + ".noise_figure_db", p.noise_figure_db);
  p.shadowing_std_db = get(tree, sec + ".shadowing_std_db", p.shadowing_std_db);
  p.pathloss_exp = get(tree, sec + ".pathloss_exp", p.pathloss_exp);
  p.nakagami_m = get(tree, sec + ".nakagami_m", p.nakagami_m);
  p.backlobe_gain = db_to_linear(get(tree, sec + ".backlobe_db", linear_to_db(p.backlobe_gain)));
  p.beamwidth_rad = get(tree, sec + ".beamwidth_deg", p.beamwidth_rad / kDeg) * kDeg;
  p.aoa_noise_std_rad = get(tree, sec + ".aoa_noise_deg", p.aoa_noise_std_rad / kDeg) * kDeg;
  // "auto" derives the main-lobe gain from beamwidth and back-lobe level.
  const double cone = cone_max_gain(p.beamwidth_rad, p.backlobe_gain);
  const auto gain = [&](const std::string& key, double current) {
    const auto s = tree.get_optional<std::string>(sec + "." + key);
    if (!s) return current;
    if (*s == "auto") return cone;
    try {
      return db_to_linear(std::stod(*s));
    } catch (const std::exception&) {
      throw ConfigError("bad value for " + sec + "." + key + ": '" + *s + "'");
    }
  };
  p.tx_gain_max = gain("tx_gain_dbi", p.tx_gain_max);
  p.rx_gain = gain("rx_gain_dbi", p.rx_gain);
}

void write_radio(pt::ptree& tree, const std::string& sec, const RadioParams& p) {
  tree.put(sec + ".carrier_hz", p.carrier_hz);
  tree.put(sec + ".bandwidth_hz", p.bandwidth_hz);
  tree.put(sec + ".tx_power_dbm", watts_to_dbm(p.tx_power_w));
  tree.put(sec + ".noise_psd_dbm_hz", watts_to_dbm(p.noise_psd_w_per_hz));
  tree.put(sec + ".noise_figure_db", p.noise_figure_db);
  tree.put(sec + ".shadowing_std_db", p.shadowing_std_db);
  tree.put(sec + ".pathloss_exp", p.pathloss_exp);
  tree.put(sec + ".nakagami_m", p.nakagami_m);
  tree.put(sec + ".backlobe_db", linear_to_db(p.backlobe_gain));
  tree.put(sec + ".beamwidth_deg", p.beamwidth_rad / kDeg);
  tree.put(sec + ".aoa_noise_deg", p.aoa_noise_std_rad / kDeg);
  const double cone = cone_max_gain(p.beamwidth_rad, p.backlobe_gain);
  const auto gain = [&](double g) {
    return std::abs(g - cone) <= 1e-12 * cone && p.tier == Tier::Sbs ? std::string("auto")
                                                                       : std::to_string(linear_to_db(g));
  };
  tree.put(sec + ".tx_gain_dbi", gain(p.tx_gain_max));
  tree.put(sec + ".rx_gain_dbi", gain(p.rx_gain));
}

ExperimentConfig from_tree(const pt::ptree& tree) {
  ExperimentConfig c = default_config();
  auto& net = c.train.env.network;
  net.n_sbs = get(tree, "network.n_sbs", net.n_sbs);
  net.coverage_radius_m = get(tree, "network.coverage_radius_m", net.coverage_radius_m);
  net.inter_cell_distance_m = get(tree, "network.inter_cell_distance_m", 1.2 * net.coverage_radius_m);
  const double side = get(tree, "network.region_side_m", 4.0 * net.coverage_radius_m);
  net.region = {0.0, 0.0, side, side};
  net.neighbor_k = get(tree, "network.neighbor_k", net.neighbor_k);
  if (auto beams = tree.get_optional<std::string>("network.beams")) {
    const auto v = parse_list(*beams);
    if (v.size() == 1) {
      net.set_uniform_beams(static_cast<int>(v[0]));
    } else {
      net.beam_budget.clear();
      for (double b : v) net.beam_budget.push_back(static_cast<int>(b));
    }
  } else {
    net.set_uniform_beams(net.beam_budget.empty() ? 3 : net.beam_budget.front());
  }
  c.train.n_ue = get(tree, "network.n_ue", c.train.n_ue);

  read_radio(tree, "mbs", c.train.env.radio.mbs);
  read_radio(tree, "sbs", c.train.env.radio.sbs);

  auto& traffic = c.train.env.traffic;
  traffic.mode = parse_traffic_mode(get<std::string>(tree, "traffic.mode", to_string(traffic.mode)));
  if (auto cls = tree.get_optional<std::string>("traffic.classes_mbps")) traffic.classes_mbps = parse_list(*cls);
  c.train.env.alpha = get(tree, "utility.alpha", c.train.env.alpha);

  auto& pol = c.train.policy;
  pol.width = get(tree, "policy.width", pol.width);
  pol.head_width = get(tree, "policy.head_width", pol.head_width);
  pol.self_query = get(tree, "policy.self_query", pol.self_query);

  auto& hp = c.train.hyper;
  hp.lr = get(tree, "learning.lr", hp.lr);
  hp.gamma = get(tree, "learning.gamma", hp.gamma);
  hp.eps_neg = get(tree, "learning.eps_neg", hp.eps_neg);
  hp.eps_pos = get(tree, "learning.eps_pos", hp.eps_pos);
  hp.horizon = get(tree, "learning.horizon", hp.horizon);
  hp.dropout_p0 = get(tree, "learning.dropout_p0", hp.dropout_p0);
  hp.dropout_p0_is_keep = get(tree, "learning.dropout_p0_is_keep", hp.dropout_p0_is_keep);
  hp.epochs = get(tree, "learning.epochs", hp.epochs);
  hp.minibatch = get(tree, "learning.minibatch", hp.minibatch);
  hp.value_coef = get(tree, "learning.value_coef", hp.value_coef);
  hp.grad_clip = get(tree, "learning.grad_clip", hp.grad_clip);
  hp.normalize_advantage = get(tree, "learning.normalize_advantage", hp.normalize_advantage);
  hp.reward_scale = get(tree, "learning.reward_scale", hp.reward_scale);

  auto& ev = c.eval;
  ev.deployments = get(tree, "eval.deployments", ev.deployments);
  ev.steps = get(tree, "eval.steps", ev.steps);
  ev.greedy = get(tree, "eval.greedy", ev.greedy);
  ev.seed = get(tree, "eval.seed", ev.seed);

  sync(c);
  net.validate();
  c.train.env.radio.mbs.validate();
  c.train.env.radio.sbs.validate();
  hp.validate();
  return c;
}

}  // namespace

ExperimentConfig default_config() {
  ExperimentConfig c;
  c.train.env.network = NetworkConfig::with_defaults(3, 50.0, 3);
  c.train.n_ue = 15;
  sync(c);
  return c;
}

ExperimentConfig reduced_config() {
  ExperimentConfig c;
  c.train.env.network = NetworkConfig::with_defaults(2, 50.0, 2);
  c.train.env.traffic.mode = TrafficMode::Infinite;
  c.train.env.alpha = 0.0;
  c.train.n_ue = 6;
  c.train.policy.width = 32;
  c.train.hyper.horizon = 25;
  c.eval.deployments = 100;
  c.eval.steps = 25;
  sync(c);
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

ExperimentConfig parse_config(const std::string& text) {
  pt::ptree tree;
  std::istringstream in(text);
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(std::string("malformed config: ") + e.what());
  }
  return from_tree(tree);
}

std::string to_ini(const ExperimentConfig& c) {
  pt::ptree tree;
  const auto& net = c.train.env.network;
  tree.put("network.n_sbs", net.n_sbs);
  tree.put("network.coverage_radius_m", net.coverage_radius_m);
  tree.put("network.inter_cell_distance_m", net.inter_cell_distance_m);
  tree.put("network.region_side_m", net.region.width());
  tree.put("network.neighbor_k", net.neighbor_k);
  std::vector<double> beams(net.beam_budget.begin(), net.beam_budget.end());
  tree.put("network.beams", join(beams));
  tree.put("network.n_ue", c.train.n_ue);
  write_radio(tree, "mbs", c.train.env.radio.mbs);
  write_radio(tree, "sbs", c.train.env.radio.sbs);
  tree.put("traffic.mode", to_string(c.train.env.traffic.mode));
  tree.put("traffic.classes_mbps", join(c.train.env.traffic.classes_mbps));
  tree.put("utility.alpha", c.train.env.alpha);
  tree.put("policy.width", c.train.policy.width);
  tree.put("policy.head_width", c.train.policy.head_width);
  tree.put("policy.self_query", c.train.policy.self_query);
  const auto& hp = c.train.hyper;
  tree.put("learning.lr", hp.lr);
  tree.put("learning.gamma", hp.gamma);
  tree.put("learning.eps_neg", hp.eps_neg);
  tree.put("learning.eps_pos", hp.eps_pos);
  tree.put("learning.horizon", hp.horizon);
  tree.put("learning.dropout_p0", hp.dropout_p0);
  tree.put("learning.dropout_p0_is_keep", hp.dropout_p0_is_keep);
  tree.put("learning.epochs", hp.epochs);
  tree.put("learning.minibatch", hp.minibatch);
  tree.put("learning.value_coef", hp.value_coef);
  tree.put("learning.grad_clip", hp.grad_clip);
  tree.put("learning.normalize_advantage", hp.normalize_advantage);
  tree.put("learning.reward_scale", hp.reward_scale);
  tree.put("eval.deployments", c.eval.deployments);
  tree.put("eval.steps", c.eval.steps);
  tree.put("eval.greedy", c.eval.greedy);
  tree.put("eval.seed", c.eval.seed);
  std::ostringstream os;
  os.precision(17);
  pt::write_ini(os, tree);
  return os.str();
}

void sync(ExperimentConfig& c) {
  c.train.policy.n_sbs = c.train.env.network.n_sbs;
  c.train.policy.region = c.train.env.network.region;
}

nlohmann::json to_json(const ExperimentConfig& c) {
  const auto& net = c.train.env.network;
  const auto radio = [](const RadioParams& p) {
    return nlohmann::json{{"carrier_hz", p.carrier_hz},
                          {"bandwidth_hz", p.bandwidth_hz},
                          {"tx_power_dbm", watts_to_dbm(p.tx_power_w)},
                          {"noise_psd_dbm_hz", watts_to_dbm(p.noise_psd_w_per_hz)},
                          {"noise_figure_db", p.noise_figure_db},
                          {"shadowing_std_db", p.shadowing_std_db},
                          {"pathloss_exp", p.pathloss_exp},
                          {"nakagami_m", p.nakagami_m},
                          {"tx_gain_dbi", linear_to_db(p.tx_gain_max)},
                          {"rx_gain_dbi", linear_to_db(p.rx_gain)},
                          {"backlobe_db", linear_to_db(p.backlobe_gain)},
                          {"beamwidth_deg", p.beamwidth_rad / kDeg},
                          {"aoa_noise_deg", p.aoa_noise_std_rad / kDeg}};
  };
  const auto& hp = c.train.hyper;
  return {
      {"network",
       {{"n_sbs", net.n_sbs},
        {"coverage_radius_m", net.coverage_radius_m},
        {"inter_cell_distance_m", net.inter_cell_distance_m},
        {"region_side_m", net.region.width()},
        {"neighbor_k", net.neighbor_k},
        {"beams", net.beam_budget},
        {"n_ue", c.train.n_ue}}},
      {"mbs", radio(c.train.env.radio.mbs)},
      {"sbs", radio(c.train.env.radio.sbs)},
      {"traffic", {{"mode", to_string(c.train.env.traffic.mode)}, {"classes_mbps", c.train.env.traffic.classes_mbps}}},
      {"utility", {{"alpha", c.train.env.alpha}}},
      {"policy",
       {{"width", c.train.policy.width},
        {"head_width", c.train.policy.heads()},
        {"query_from_neighbor", !c.train.policy.self_query}}},
      {"learning",
       {{"optimizer", "adam"},
        {"lr", hp.lr},
        {"gamma", hp.gamma},
        {"eps_neg", hp.eps_neg},
        {"eps_pos", hp.eps_pos},
        {"horizon", hp.horizon},
        {"dropout_p0", hp.dropout_p0},
        {"dropout_p0_is_keep", hp.dropout_p0_is_keep},
        {"epochs", hp.epochs},
        {"minibatch", hp.minibatch},
        {"value_coef", hp.value_coef},
        {"grad_clip", hp.grad_clip},
        {"normalize_advantage", hp.normalize_advantage},
        {"reward_scale", hp.reward_scale}}},
      {"eval",
       {{"deployments", c.eval.deployments},
        {"steps", c.eval.steps},
        {"greedy", c.eval.greedy},
        {"seed", c.eval.seed}}},
  };
}

TrafficMode parse_traffic_mode(const std::string& s) {
  if (s == "poisson" || s == "on") return TrafficMode::Poisson;
  if (s == "infinite" || s == "off") return TrafficMode::Infinite;
  throw ConfigError("unknown traffic mode '" + s + "' (expected poisson|infinite)");
}

std::string to_string(TrafficMode mode) { return mode == TrafficMode::Poisson ? "poisson" : "infinite"; }

}  // namespace tua::harness
