#include "tua/channel.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "tua/error.hpp"

namespace tua {

double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
double linear_to_db(double lin) { return 10.0 * std::log10(lin); }
double dbm_to_watts(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }
double watts_to_dbm(double w) { return 10.0 * std::log10(w) + 30.0; }

double RadioParams::pathloss_const() const {
  const double r = kSpeedOfLight / (4.0 * std::numbers::pi * carrier_hz);
  return r * r;
}

double RadioParams::noise_w(double band_hz) const {
  return noise_psd_w_per_hz * band_hz * db_to_linear(noise_figure_db);
}

void RadioParams::validate() const {
  if (!(carrier_hz > 0.0) || !(bandwidth_hz > 0.0) || !(tx_power_w > 0.0) || !(noise_psd_w_per_hz > 0.0))
    throw ConfigError("radio powers, band and carrier must be > 0");
  if (!(tx_gain_max > 0.0) || !(rx_gain > 0.0) || !(backlobe_gain > 0.0))
    throw ConfigError("antenna gains must be > 0");
  if (nakagami_m < 0.5) throw ConfigError("nakagami_m must be >= 0.5, got " + std::to_string(nakagami_m));
  if (!(beamwidth_rad > 0.0) || beamwidth_rad > 2.0 * std::numbers::pi)
    throw ConfigError("beamwidth must lie in (0, 2 pi]");
  if (shadowing_std_db < 0.0 || aoa_noise_std_rad < 0.0) throw ConfigError("standard deviations must be >= 0");
}

double cone_max_gain(double beamwidth_rad, double backlobe_rel) {
  const double two_pi = 2.0 * std::numbers::pi;
  return two_pi / (beamwidth_rad + backlobe_rel * (two_pi - beamwidth_rad));
}

RadioParams RadioParams::macro_defaults() {
  RadioParams p;
  p.tier = Tier::Mbs;
  p.carrier_hz = 2.0e9;
  p.bandwidth_hz = 10.0e6;
  p.tx_power_w = dbm_to_watts(46.0);
  p.noise_psd_w_per_hz = dbm_to_watts(-174.0);
  p.noise_figure_db = 5.0;
  p.shadowing_std_db = std::sqrt(9.0);
  p.pathloss_exp = 3.76;
  p.nakagami_m = 1.0;  // Rayleigh
  p.tx_gain_max = db_to_linear(17.0);
  p.rx_gain = db_to_linear(0.0);
  p.backlobe_gain = 1.0;
  p.beamwidth_rad = 2.0 * std::numbers::pi;
  p.aoa_noise_std_rad = 2.0 * std::numbers::pi / 180.0;
  return p;
}

RadioParams RadioParams::small_cell_defaults() {
  RadioParams p;
  p.tier = Tier::Sbs;
  p.carrier_hz = 28.0e9;
  p.bandwidth_hz = 200.0e6;
  p.tx_power_w = dbm_to_watts(20.0);
  p.noise_psd_w_per_hz = dbm_to_watts(-174.0);
  p.noise_figure_db = 0.0;
  p.shadowing_std_db = std::sqrt(12.0);
  p.pathloss_exp = 2.5;
  p.nakagami_m = 3.0;
  p.backlobe_gain = db_to_linear(-20.0);
  p.beamwidth_rad = 30.0 * std::numbers::pi / 180.0;
  p.tx_gain_max = cone_max_gain(p.beamwidth_rad, p.backlobe_gain);
  p.rx_gain = p.tx_gain_max;
  p.aoa_noise_std_rad = 2.0 * std::numbers::pi / 180.0;
  return p;
}

double received_power(double d, const RadioParams& params, double h, double shadow, double tx_gain,
                      double rx_gain) {
  const double dd = d < kMinDistance ? kMinDistance : d;
  return h * params.tx_power_w * tx_gain * rx_gain * params.pathloss_const() * std::pow(dd, -params.pathloss_exp) *
         shadow;
}

double sample_fading(const RadioParams& params, Rng& rng) {
  std::gamma_distribution<double> g(params.nakagami_m, 1.0 / params.nakagami_m);
  return g(rng);
}

double antenna_gain(double offset_rad, double gain_max, const RadioParams& params) {
  if (std::abs(offset_rad) <= 0.5 * params.beamwidth_rad) return gain_max;
  return gain_max * params.backlobe_gain;
}

Matrix sample_shadowing(const RadioConfig& radio, std::size_t n_bs, std::size_t n_ue, Rng& rng) {
  Matrix s(n_bs, n_ue, 1.0);
  for (std::size_t i = 0; i < n_bs; ++i) {
    const double sd = radio.of(static_cast<BsId>(i)).shadowing_std_db;
    if (sd <= 0.0) continue;
    std::normal_distribution<double> nd(0.0, sd);
    for (std::size_t j = 0; j < n_ue; ++j) s(i, j) = db_to_linear(nd(rng));
  }
  return s;
}

Matrix sample_fading_grid(const RadioConfig& radio, std::size_t n_bs, std::size_t n_ue, Rng& rng) {
  Matrix h(n_bs, n_ue);
  for (std::size_t i = 0; i < n_bs; ++i) {
    const auto& p = radio.of(static_cast<BsId>(i));
    for (std::size_t j = 0; j < n_ue; ++j) h(i, j) = sample_fading(p, rng);
  }
  return h;
}

ChannelRealization expected_channel(const Matrix& shadowing) {
  return {Matrix(shadowing.rows(), shadowing.cols(), 1.0), shadowing};
}

Measurement measure(std::size_t ue, const Deployment& deployment, const Topology& topology,
                    const RadioConfig& radio, const ChannelRealization& channel, Rng& rng) {
  const std::size_t n_bs = topology.bs_positions.size();
  Measurement m{std::vector<double>(n_bs, 0.0), std::vector<double>(n_bs, 0.0)};
  const Point p = deployment.positions.at(ue);
  for (BsId i : topology.candidate_sets.at(ue)) {
    const auto bi = static_cast<std::size_t>(i);
    const auto& params = radio.of(i);
    const Point b = topology.bs_positions[bi];
    m.rss_w[bi] = received_power(distance(b, p), params, channel.fading(bi, ue), channel.shadowing(bi, ue),
                                 params.tx_gain_max, params.rx_gain);
    double aoa = bearing(b, p);
    if (params.aoa_noise_std_rad > 0.0) {
      std::normal_distribution<double> nd(0.0, params.aoa_noise_std_rad);
      aoa += nd(rng);
    }
    m.aoa_rad[bi] = aoa;
  }
  return m;
}

Matrix snr_grid(const Deployment& deployment, const Topology& topology, const RadioConfig& radio,
                const ChannelRealization& channel) {
  const std::size_t n_bs = topology.bs_positions.size();
  Matrix snr(n_bs, deployment.size());
  for (std::size_t i = 0; i < n_bs; ++i) {
    const auto& params = radio.of(static_cast<BsId>(i));
    const double noise = params.noise_w(params.bandwidth_hz);
    for (std::size_t j = 0; j < deployment.size(); ++j) {
      const double d = distance(topology.bs_positions[i], deployment.positions[j]);
      snr(i, j) = received_power(d, params, channel.fading(i, j), channel.shadowing(i, j), params.tx_gain_max,
                                 params.rx_gain) /
                  noise;
    }
  }
  return snr;
}

std::vector<LinkState> compute_sinr_and_rates(std::span<const BsId> association, const Deployment& deployment,
                                              const Topology& topology, const RadioConfig& radio,
                                              const ChannelRealization& channel) {
  const std::size_t n_ue = deployment.size();
  const auto n_bs = static_cast<BsId>(topology.bs_positions.size());
  if (association.empty()) throw Error("empty association");
  if (association.size() != n_ue)
    throw ShapeError("association has " + std::to_string(association.size()) + " entries for " +
                     std::to_string(n_ue) + " UEs");

  std::size_t macro_load = 0;
  std::vector<std::size_t> sbs_served;
  for (std::size_t j = 0; j < n_ue; ++j) {
    const BsId a = association[j];
    if (a < 0 || a >= n_bs) throw Error("association references unknown BS " + std::to_string(a));
    if (a == kMacroBs)
      ++macro_load;
    else
      sbs_served.push_back(j);
  }

  const auto& sbs = radio.sbs;
  const auto& mbs = radio.mbs;
  std::vector<LinkState> links(n_ue);
  for (std::size_t j = 0; j < n_ue; ++j) {
    const BsId a = association[j];
    const auto ai = static_cast<std::size_t>(a);
    const Point ue = deployment.positions[j];
    const Point bs = topology.bs_positions[ai];
    const auto& params = radio.of(a);
    LinkState& L = links[j];
    L.bs = a;
    L.distance_m = std::max(distance(bs, ue), kMinDistance);
    L.fading = channel.fading(ai, j);
    L.shadowing = channel.shadowing(ai, j);
    L.aoa_rad = bearing(bs, ue);
    L.rss_w = received_power(L.distance_m, params, L.fading, L.shadowing, params.tx_gain_max, params.rx_gain);

    if (a == kMacroBs) {
      L.bandwidth_hz = mbs.bandwidth_hz / static_cast<double>(macro_load);
    } else {
      L.bandwidth_hz = sbs.bandwidth_hz;
      const double serve_dir = bearing(ue, bs);
      for (std::size_t jj : sbs_served) {
        if (jj == j) continue;
        const auto ii = static_cast<std::size_t>(association[jj]);
        const Point ibs = topology.bs_positions[ii];
        const double phi = angle_offset(bearing(ibs, ue), bearing(ibs, deployment.positions[jj]));
        const double psi = ii == ai ? 0.0 : angle_offset(bearing(ue, ibs), serve_dir);
        L.interference_w += received_power(distance(ibs, ue), sbs, channel.fading(ii, j), channel.shadowing(ii, j),
                                           antenna_gain(phi, sbs.tx_gain_max, sbs),
                                           antenna_gain(psi, sbs.rx_gain, sbs));
      }
    }
    L.noise_w = params.noise_w(L.bandwidth_hz);
    L.sinr = L.rss_w / (L.interference_w + L.noise_w);
    L.rate_bps = L.bandwidth_hz * std::log2(1.0 + L.sinr);
  }
  return links;
}

std::vector<double> served_rates(std::span<const LinkState> links) {
  std::vector<double> r(links.size());
  for (std::size_t j = 0; j < links.size(); ++j) r[j] = links[j].rate_bps;
  return r;
}

}  // namespace tua
