#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "tua/learner.hpp"

namespace tua::harness {

inline constexpr const char* kCodeVersion = "0.3.0";
inline constexpr const char* kOutDirEnv = "TUA_OUT_DIR";

struct Manifest {
  nlohmann::json doc;

  std::string hash() const;  // 16 hex digits over the canonical dump
};

Manifest make_manifest(const nlohmann::json& config, const nlohmann::json& seeds, const std::string& command,
                       const nlohmann::json& outputs);

// Output directory: explicit flag, then $TUA_OUT_DIR, then "out".
std::filesystem::path resolve_outdir(const std::string& flag);

// Creates the directory; throws Error if it cannot be written.
void ensure_writable(const std::filesystem::path& dir);

inline const std::vector<std::string>& metrics_columns() {
  static const std::vector<std::string> cols{"episode",        "seed",        "K",           "mean_reward",
                                            "heuristic_reward", "r_d",       "maxsnr_reward", "policy_entropy",
                                            "actor_loss",     "critic_loss", "collisions",  "wall_ms"};
  return cols;
}

std::string metrics_csv(std::span<const EpisodeMetrics> metrics, const std::string& manifest_hash);

// Generic CSV table: header + numeric rows. '#' lines are comments.
struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
  std::vector<std::string> comments;

  std::ptrdiff_t column(const std::string& name) const;
  std::vector<double> series(const std::string& name) const;
};

Table parse_csv(const std::string& text);
std::string to_csv(const Table& table);

std::vector<double> rolling_mean(std::span<const double> values, std::size_t window);

struct Series {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
};

// Line chart; `data` is embedded verbatim as CSV inside <metadata>.
std::string svg_line_chart(const std::string& title, const std::string& x_label, const std::string& y_label,
                           std::span<const Series> series, const Table& data, const std::string& manifest_hash);

struct BarGroup {
  std::string label;            // e.g. "K=10"
  std::vector<double> values;   // one bar per method
};

std::string svg_bar_chart(const std::string& title, const std::string& y_label,
                          std::span<const std::string> methods, std::span<const BarGroup> groups,
                          const Table& data, const std::string& manifest_hash);

// Recovers the CSV embedded by the chart writers.
std::string svg_metadata(const std::string& svg);

void write_text(const std::filesystem::path& path, const std::string& content);
std::string read_text(const std::filesystem::path& path);

// Renders a metrics CSV (reward curve with a 100-episode rolling mean) or a
// sweep CSV (grouped bars). Returns false when the input has no rows.
bool plot_csv(const std::filesystem::path& in, const std::filesystem::path& out);

}  // namespace tua::harness
