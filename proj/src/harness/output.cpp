#include "tua/harness/output.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <sstream>

#include "tua/error.hpp"
#include "tua/nn.hpp"

namespace tua::harness {

namespace fs = std::filesystem;

std::string Manifest::hash() const {
  const std::string dump = doc.dump();
  const auto h = nn::fnv1a({reinterpret_cast<const unsigned char*>(dump.data()), dump.size()});
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

Manifest make_manifest(const nlohmann::json& config, const nlohmann::json& seeds, const std::string& command,
                       const nlohmann::json& outputs) {
  nlohmann::json flags = {{"optimizer", "adam"},
                          {"heuristic_interference_aware", true},
                          {"baselines_planned_on", "expected channel, mean demands"}};
  if (config.contains("learning")) {
    const auto& l = config["learning"];
    if (l.contains("dropout_p0_is_keep")) flags["dropout_p0_is_keep"] = l["dropout_p0_is_keep"];
  }
  if (config.contains("policy") && config["policy"].contains("query_from_neighbor"))
    flags["query_from_neighbor"] = config["policy"]["query_from_neighbor"];
  Manifest m;
  m.doc = {{"code_version", kCodeVersion}, {"command", command}, {"config", config},
           {"seeds", seeds},               {"interpretation", flags}, {"outputs", outputs}};
  return m;
}

fs::path resolve_outdir(const std::string& flag) {
  if (!flag.empty()) return flag;
  if (const char* env = std::getenv(kOutDirEnv); env && *env) return env;
  return "out";
}

void ensure_writable(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw Error("cannot create output directory " + dir.string());
  const fs::path probe = dir / ".tua_write_probe";
  {
    std::ofstream out(probe);
    if (!out) throw Error("output directory is not writable: " + dir.string());
  }
  fs::remove(probe, ec);
}

std::string metrics_csv(std::span<const EpisodeMetrics> metrics, const std::string& manifest_hash) {
  std::ostringstream os;
  os.precision(12);
  os << "# manifest " << manifest_hash << "\n";
  const auto& cols = metrics_columns();
  for (std::size_t i = 0; i < cols.size(); ++i) os << (i ? "," : "") << cols[i];
  os << "\n";
  for (const auto& m : metrics) {
    os << m.episode << ',' << m.seed << ',' << m.k << ',' << m.mean_reward << ',' << m.heuristic_reward << ','
       << m.r_d << ',' << m.maxsnr_reward << ',' << m.policy_entropy << ',' << m.actor_loss << ',' << m.critic_loss
       << ',' << m.collisions << ',' << m.wall_ms << "\n";
  }
  return os.str();
}

std::ptrdiff_t Table::column(const std::string& name) const {
  const auto it = std::find(columns.begin(), columns.end(), name);
  return it == columns.end() ? -1 : it - columns.begin();
}

std::vector<double> Table::series(const std::string& name) const {
  const auto c = column(name);
  if (c < 0) throw Error("no column '" + name + "'");
  std::vector<double> out;
  out.reserve(rows.size());
  for (const auto& r : rows) out.push_back(r.at(static_cast<std::size_t>(c)));
  return out;
}

Table parse_csv(const std::string& text) {
  Table t;
  std::istringstream in(text);
  std::string line;
  bool header = false;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line.front() == '#') {
      const auto start = line.find_first_not_of("# ");
      t.comments.push_back(start == std::string::npos ? "" : line.substr(start));
      continue;
    }
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!header) {
      t.columns = std::move(cells);
      header = true;
      continue;
    }
    if (cells.size() != t.columns.size()) throw Error("CSV row has " + std::to_string(cells.size()) + " cells");
    std::vector<double> row;
    row.reserve(cells.size());
    for (const auto& c : cells) {
      try {
        row.push_back(std::stod(c));
      } catch (const std::exception&) {
        throw Error("non-numeric CSV cell '" + c + "'");
      }
    }
    t.rows.push_back(std::move(row));
  }
  return t;
}

std::string to_csv(const Table& t) {
  std::ostringstream os;
  os.precision(17);
  for (const auto& c : t.comments) os << "# " << c << "\n";
  for (std::size_t i = 0; i < t.columns.size(); ++i) os << (i ? "," : "") << t.columns[i];
  os << "\n";
  for (const auto& r : t.rows) {
    for (std::size_t i = 0; i < r.size(); ++i) os << (i ? "," : "") << r[i];
    os << "\n";
  }
  return os.str();
}

std::vector<double> rolling_mean(std::span<const double> values, std::size_t window) {
  std::vector<double> out(values.size());
  if (window == 0) window = 1;
  double sum = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    sum += values[i];
    if (i >= window) sum -= values[i - window];
    out[i] = sum / static_cast<double>(std::min(i + 1, window));
  }
  return out;
}

namespace {

constexpr double kW = 720.0, kH = 440.0, kLeft = 80.0, kRight = 160.0, kTop = 40.0, kBottom = 60.0;
const char* const kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"};

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

struct Range {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  void add(double v) {
    if (!std::isfinite(v)) return;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  void pad() {
    if (!std::isfinite(lo)) lo = 0.0, hi = 1.0;
    if (hi - lo < 1e-12 * std::max(1.0, std::abs(hi))) {
      const double d = std::max(1.0, std::abs(hi)) * 0.05;
      lo -= d;
      hi += d;
    }
  }
  double map(double v, double a, double b) const { return a + (v - lo) / (hi - lo) * (b - a); }
};

std::string open_svg(const std::string& title) {
  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kW << "\" height=\"" << kH << "\" viewBox=\"0 0 "
     << kW << ' ' << kH << "\" font-family=\"sans-serif\" font-size=\"12\">\n"
     << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
     << "<text x=\"" << kW / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">" << escape(title)
     << "</text>\n";
  return os.str();
}

std::string metadata(const Table& data, const std::string& manifest_hash) {
  return "<metadata manifest=\"" + escape(manifest_hash) + "\"><![CDATA[\n" + to_csv(data) + "]]></metadata>\n";
}

std::string y_axis(const Range& y, const std::string& label) {
  std::ostringstream os;
  const double x0 = kLeft, y0 = kH - kBottom, y1 = kTop;
  os << "<line x1=\"" << x0 << "\" y1=\"" << y0 << "\" x2=\"" << x0 << "\" y2=\"" << y1
     << "\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double v = y.lo + (y.hi - y.lo) * i / 4.0;
    const double py = y.map(v, y0, y1);
    os << "<line x1=\"" << x0 - 4 << "\" y1=\"" << py << "\" x2=\"" << kW - kRight << "\" y2=\"" << py
       << "\" stroke=\"#ddd\"/>\n"
       << "<text x=\"" << x0 - 6 << "\" y=\"" << py + 4 << "\" text-anchor=\"end\">" << num(v) << "</text>\n";
  }
  os << "<text transform=\"translate(16," << (y0 + y1) / 2 << ") rotate(-90)\" text-anchor=\"middle\">"
     << escape(label) << "</text>\n";
  return os.str();
}

std::string legend(std::span<const std::string> names) {
  std::ostringstream os;
  for (std::size_t i = 0; i < names.size(); ++i) {
    const double y = kTop + 18.0 * static_cast<double>(i);
    os << "<rect x=\"" << kW - kRight + 12 << "\" y=\"" << y << "\" width=\"12\" height=\"12\" fill=\""
       << kPalette[i % 6] << "\"/>\n"
       << "<text x=\"" << kW - kRight + 30 << "\" y=\"" << y + 10 << "\">" << escape(names[i]) << "</text>\n";
  }
  return os.str();
}

}  // namespace

std::string svg_line_chart(const std::string& title, const std::string& x_label, const std::string& y_label,
                           std::span<const Series> series, const Table& data, const std::string& manifest_hash) {
  Range xr, yr;
  for (const auto& s : series) {
    for (double v : s.x) xr.add(v);
    for (double v : s.y) yr.add(v);
  }
  xr.pad();
  yr.pad();
  std::ostringstream os;
  os << open_svg(title) << metadata(data, manifest_hash) << y_axis(yr, y_label);
  const double x0 = kLeft, x1 = kW - kRight, y0 = kH - kBottom, y1 = kTop;
  os << "<line x1=\"" << x0 << "\" y1=\"" << y0 << "\" x2=\"" << x1 << "\" y2=\"" << y0 << "\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double v = xr.lo + (xr.hi - xr.lo) * i / 4.0;
    os << "<text x=\"" << xr.map(v, x0, x1) << "\" y=\"" << y0 + 16 << "\" text-anchor=\"middle\">" << num(v)
       << "</text>\n";
  }
  os << "<text x=\"" << (x0 + x1) / 2 << "\" y=\"" << kH - 18 << "\" text-anchor=\"middle\">" << escape(x_label)
     << "</text>\n";
  std::vector<std::string> names;
  for (std::size_t i = 0; i < series.size(); ++i) {
    const auto& s = series[i];
    names.push_back(s.label);
    os << "<polyline fill=\"none\" stroke=\"" << kPalette[i % 6] << "\" stroke-width=\"1.5\" points=\"";
    const std::size_t n = std::min(s.x.size(), s.y.size());
    for (std::size_t j = 0; j < n; ++j) {
      if (!std::isfinite(s.y[j])) continue;
      os << xr.map(s.x[j], x0, x1) << ',' << yr.map(s.y[j], y0, y1) << ' ';
    }
    os << "\"/>\n";
  }
  os << legend(names) << "</svg>\n";
  return os.str();
}

std::string svg_bar_chart(const std::string& title, const std::string& y_label, std::span<const std::string> methods,
                          std::span<const BarGroup> groups, const Table& data, const std::string& manifest_hash) {
  Range yr;
  yr.add(0.0);
  for (const auto& g : groups)
    for (double v : g.values) yr.add(v);
  yr.pad();
  std::ostringstream os;
  os << open_svg(title) << metadata(data, manifest_hash) << y_axis(yr, y_label);
  const double x0 = kLeft, x1 = kW - kRight, y0 = kH - kBottom, y1 = kTop;
  os << "<line x1=\"" << x0 << "\" y1=\"" << y0 << "\" x2=\"" << x1 << "\" y2=\"" << y0 << "\" stroke=\"black\"/>\n";
  const double slot = (x1 - x0) / static_cast<double>(std::max<std::size_t>(groups.size(), 1));
  const double bar = slot * 0.8 / static_cast<double>(std::max<std::size_t>(methods.size(), 1));
  const double base = yr.map(std::max(yr.lo, 0.0), y0, y1);
  for (std::size_t g = 0; g < groups.size(); ++g) {
    const double left = x0 + slot * static_cast<double>(g) + slot * 0.1;
    for (std::size_t m = 0; m < groups[g].values.size(); ++m) {
      const double top = yr.map(groups[g].values[m], y0, y1);
      os << "<rect x=\"" << left + bar * static_cast<double>(m) << "\" y=\"" << std::min(top, base)
         << "\" width=\"" << bar * 0.95 << "\" height=\"" << std::abs(base - top) << "\" fill=\"" << kPalette[m % 6]
         << "\"/>\n";
    }
    os << "<text x=\"" << x0 + slot * (static_cast<double>(g) + 0.5) << "\" y=\"" << y0 + 16
       << "\" text-anchor=\"middle\">" << escape(groups[g].label) << "</text>\n";
  }
  os << legend(methods) << "</svg>\n";
  return os.str();
}

std::string svg_metadata(const std::string& svg) {
  const std::string open = "<![CDATA[\n", close = "]]></metadata>";
  const auto a = svg.find(open);
  const auto b = svg.find(close);
  if (a == std::string::npos || b == std::string::npos || b < a) throw Error("SVG has no embedded data");
  return svg.substr(a + open.size(), b - a - open.size());
}

void write_text(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << content;
  if (!out) throw Error("write failed for " + path.string());
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

namespace {

std::string manifest_of(const Table& t) {
  for (const auto& c : t.comments)
    if (c.rfind("manifest ", 0) == 0) return c.substr(9);
  return "";
}

}  // namespace

bool plot_csv(const fs::path& in, const fs::path& out) {
  const Table t = parse_csv(read_text(in));
  if (t.rows.empty()) return false;
  const std::string hash = manifest_of(t);

  if (t.column("episode") >= 0 && t.column("mean_reward") >= 0) {
    const auto x = t.series("episode");
    std::vector<Series> series;
    for (const auto& [col, label] : std::vector<std::pair<std::string, std::string>>{
             {"mean_reward", "policy"}, {"heuristic_reward", "heuristic"}, {"maxsnr_reward", "max-SNR"}}) {
      if (t.column(col) < 0) continue;
      const auto y = t.series(col);
      series.push_back({label + " (rolling 100)", x, rolling_mean(y, 100)});
    }
    write_text(out, svg_line_chart("Mean reward per episode", "episode", "sum utility (bps)", series, t, hash));
    return true;
  }

  if (t.column("policy") >= 0 && (t.column("k") >= 0 || t.column("n_i") >= 0)) {
    std::string axis = "k";
    if (t.column("k") < 0) {
      axis = "n_i";
    } else if (t.column("n_i") >= 0) {
      const auto ks = t.series("k");
      if (std::all_of(ks.begin(), ks.end(), [&](double v) { return v == ks.front(); })) axis = "n_i";
    }
    std::vector<std::string> methods;
    for (const char* m : {"policy", "max_snr", "heuristic"})
      if (t.column(m) >= 0) methods.emplace_back(m);
    std::vector<BarGroup> groups;
    const auto keys = t.series(axis);
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
      BarGroup g;
      g.label = (axis == "k" ? "K=" : "N_i=") + num(keys[r]);
      for (const auto& m : methods) g.values.push_back(t.rows[r][static_cast<std::size_t>(t.column(m))]);
      groups.push_back(std::move(g));
    }
    write_text(out, svg_bar_chart("Mean utility per " + std::string(axis == "k" ? "UE count" : "beam budget"),
                                  "sum utility (bps)", methods, groups, t, hash));
    return true;
  }

  std::vector<Series> series;
  std::vector<double> x(t.rows.size());
  for (std::size_t r = 0; r < x.size(); ++r) x[r] = t.rows[r][0];
  for (std::size_t c = 1; c < t.columns.size(); ++c) {
    std::vector<double> y(t.rows.size());
    for (std::size_t r = 0; r < y.size(); ++r) y[r] = t.rows[r][c];
    series.push_back({t.columns[c], x, std::move(y)});
  }
  write_text(out, svg_line_chart(in.filename().string(), t.columns.front(), "value", series, t, hash));
  return true;
}

}  // namespace tua::harness
