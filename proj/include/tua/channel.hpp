#pragma once

#include <cstddef>
#include <numbers>
#include <span>
#include <vector>

#include "tua/geometry.hpp"
#include "tua/matrix.hpp"
#include "tua/rng.hpp"

namespace tua {

enum class Tier { Mbs, Sbs };

inline constexpr double kSpeedOfLight = 3.0e8;
inline constexpr double kMinDistance = 1.0;  // Friis clamp, meters

double db_to_linear(double db);
double linear_to_db(double lin);
double dbm_to_watts(double dbm);
double watts_to_dbm(double w);

struct RadioParams {
  Tier tier = Tier::Mbs;
  double carrier_hz = 2.0e9;
  double bandwidth_hz = 10.0e6;
  double tx_power_w = 0.0;
  double noise_psd_w_per_hz = 0.0;
  double noise_figure_db = 0.0;
  double shadowing_std_db = 0.0;
  double pathloss_exp = 2.0;
  double nakagami_m = 1.0;
  double tx_gain_max = 1.0;   // linear
  double rx_gain = 1.0;       // linear, main lobe for SBS
  double backlobe_gain = 1.0; // linear, relative to the main lobe (SBS only)
  double beamwidth_rad = 2.0 * std::numbers::pi;
  double aoa_noise_std_rad = 0.0;

  // C_s = (c / (4 pi f_s))^2
  double pathloss_const() const;
  double noise_w(double band_hz) const;
  void validate() const;

  static RadioParams macro_defaults();
  static RadioParams small_cell_defaults();
};

// Main-lobe gain for a 2-D cone pattern whose pattern integrates to 2 pi.
double cone_max_gain(double beamwidth_rad, double backlobe_rel);

struct RadioConfig {
  RadioParams mbs = RadioParams::macro_defaults();
  RadioParams sbs = RadioParams::small_cell_defaults();

  const RadioParams& of(BsId bs) const { return bs == kMacroBs ? mbs : sbs; }
};

// h * P * Gtx * Grx * C * d^-eta * shadow, with d clamped to kMinDistance.
double received_power(double d, const RadioParams& params, double h, double shadow, double tx_gain,
                      double rx_gain);

// Power-domain Nakagami fading: Gamma(m, 1/m), unit mean.
double sample_fading(const RadioParams& params, Rng& rng);

// Cone pattern: gain_max inside |offset| <= beamwidth/2, gain_max * backlobe outside.
double antenna_gain(double offset_rad, double gain_max, const RadioParams& params);

// Per-(BS, UE) random state. Shadowing is frozen for an episode, fading
// is redrawn every step.
struct ChannelRealization {
  Matrix fading;     // n_bs x K
  Matrix shadowing;  // n_bs x K, linear multipliers
};

Matrix sample_shadowing(const RadioConfig& radio, std::size_t n_bs, std::size_t n_ue, Rng& rng);
Matrix sample_fading_grid(const RadioConfig& radio, std::size_t n_bs, std::size_t n_ue, Rng& rng);

// Fading fixed at its mean (h = 1): the expected channel used for planning.
ChannelRealization expected_channel(const Matrix& shadowing);

struct Measurement {
  // Length n_bs; entries for BSs outside the candidate set are 0.
  std::vector<double> rss_w;
  std::vector<double> aoa_rad;
};

// RSS under maximum Tx/Rx gains and AoA (bearing of the UE in the BS frame
// plus Gaussian error) for every candidate BS of `ue`.
Measurement measure(std::size_t ue, const Deployment& deployment, const Topology& topology,
                    const RadioConfig& radio, const ChannelRealization& channel, Rng& rng);

// Interference-free SNR under maximum gains and the full tier band. n_bs x K.
Matrix snr_grid(const Deployment& deployment, const Topology& topology, const RadioConfig& radio,
                const ChannelRealization& channel);

struct LinkState {
  BsId bs = kMacroBs;
  double distance_m = 0.0;
  double fading = 0.0;
  double shadowing = 1.0;
  double rss_w = 0.0;   // serving-link signal power
  double aoa_rad = 0.0; // true bearing of the UE in the serving BS frame
  double bandwidth_hz = 0.0;
  double interference_w = 0.0;
  double noise_w = 0.0;
  double sinr = 0.0;
  double rate_bps = 0.0;
};

// Evaluates every UE's serving link under `association` (serving BS per UE).
// SBS-served UEs see every other active SBS beam as interference; the MBS
// splits its band equally among its UEs and sees no interference.
std::vector<LinkState> compute_sinr_and_rates(std::span<const BsId> association, const Deployment& deployment,
                                              const Topology& topology, const RadioConfig& radio,
                                              const ChannelRealization& channel);

std::vector<double> served_rates(std::span<const LinkState> links);

}  // namespace tua
