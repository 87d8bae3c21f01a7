#include "cmdrnn/data.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace cmdrnn {

namespace {

// Shortest round-trip decimal form.
std::string format_double(double v) {
  char buf[32];
  auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, p);
}

double parse_cell(const std::string& cell, const std::string& path, std::size_t lineno) {
  double out = 0.0;
  auto [p, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), out);
  if (ec != std::errc{} || p != cell.data() + cell.size()) {
    throw ParseError(path + ":" + std::to_string(lineno) + ": non-numeric cell '" + cell + "'");
  }
  return out;
}

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      cells.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  cells.push_back(cur);
  return cells;
}

bool valid_rssi(double v) {
  return v == kRssiSentinel || (v >= kRssiFloor && v <= 0.0);
}

}  // namespace

TrajectoryDataset load_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open dataset '" + path + "'");

  std::string line;
  if (!std::getline(in, line)) throw ParseError(path + ":1: empty file");
  const auto header = split_line(line);
  if (header.size() < 3 || header[header.size() - 2] != "x" || header.back() != "y") {
    throw ParseError(path + ":1: header must be rssi_0,...,rssi_{D-1},x,y");
  }
  const std::size_t dims = header.size() - 2;
  for (std::size_t i = 0; i < dims; ++i) {
    if (header[i] != "rssi_" + std::to_string(i)) {
      throw ParseError(path + ":1: expected column 'rssi_" + std::to_string(i) + "', got '" + header[i] + "'");
    }
  }

  std::vector<double> rssi;
  std::vector<double> coords;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto cells = split_line(line);
    if (cells.size() != dims + 2) {
      throw ParseError(path + ":" + std::to_string(lineno) + ": expected " + std::to_string(dims + 2) +
                       " cells, got " + std::to_string(cells.size()));
    }
    for (std::size_t i = 0; i < dims; ++i) {
      const double v = parse_cell(cells[i], path, lineno);
      if (!valid_rssi(v)) {
        throw ParseError(path + ":" + std::to_string(lineno) + ": RSSI value " + cells[i] +
                         " outside [-100, 0] and not the sentinel 100");
      }
      rssi.push_back(v);
    }
    coords.push_back(parse_cell(cells[dims], path, lineno));
    coords.push_back(parse_cell(cells[dims + 1], path, lineno));
  }
  const std::size_t steps = coords.size() / 2;
  if (steps == 0) throw ParseError(path + ": no data rows");

  TrajectoryDataset d;
  d.rssi = Tensor(Shape{steps, dims}, std::move(rssi));
  d.coords = Tensor(Shape{steps, 2}, std::move(coords));
  d.name = path;
  return d;
}

void save_csv(const TrajectoryDataset& d, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write dataset '" + path + "'");
  const std::size_t dims = d.dims();
  for (std::size_t i = 0; i < dims; ++i) out << "rssi_" << i << ',';
  out << "x,y\n";
  for (std::size_t t = 0; t < d.steps(); ++t) {
    for (std::size_t i = 0; i < dims; ++i) out << format_double(d.rssi.at(t, i)) << ',';
    out << format_double(d.coords.at(t, 0)) << ',' << format_double(d.coords.at(t, 1)) << '\n';
  }
  if (!out) throw IoError("write failed for '" + path + "'");
}

double normalize_rssi_value(double r) {
  if (r == kRssiSentinel) return 0.0;
  return (r - kRssiFloor) / (-kRssiFloor);
}

Tensor normalize_rssi(const TrajectoryDataset& d) {
  Tensor out(d.rssi.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = normalize_rssi_value(d.rssi[i]);
  return out;
}

std::vector<WindowedSample> make_windows(const TrajectoryDataset& d, std::size_t memory) {
  if (memory == 0) throw ConfigError("memory length must be positive");
  if (d.steps() < memory + 1) {
    throw ConfigError("trajectory too short: " + std::to_string(d.steps()) + " steps for memory length " +
                      std::to_string(memory));
  }
  const Tensor norm = normalize_rssi(d);
  const std::size_t dims = d.dims();
  std::vector<WindowedSample> samples;
  samples.reserve(d.steps() - memory);
  for (std::size_t i = 0; i + memory < d.steps(); ++i) {
    WindowedSample s;
    s.inputs = Tensor(Shape{memory, dims});
    for (std::size_t t = 0; t < memory; ++t) {
      for (std::size_t j = 0; j < dims; ++j) s.inputs.at(t, j) = norm.at(i + t, j);
    }
    s.target = Tensor::vec({d.coords.at(i + memory, 0), d.coords.at(i + memory, 1)});
    samples.push_back(std::move(s));
  }
  return samples;
}

std::pair<std::vector<WindowedSample>, std::vector<WindowedSample>> split(
    const std::vector<WindowedSample>& samples, double train_fraction, bool chronological,
    std::uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw ConfigError("train fraction must be in (0, 1)");
  }
  std::vector<WindowedSample> ordered = samples;
  if (!chronological) {
    rng::Engine eng(seed);
    rng::shuffle(ordered, eng);
  }
  const std::size_t n_train = static_cast<std::size_t>(train_fraction * static_cast<double>(ordered.size()));
  if (n_train == 0 || n_train == ordered.size()) {
    throw ConfigError("split produces an empty side (" + std::to_string(n_train) + "/" +
                      std::to_string(ordered.size() - n_train) + ")");
  }
  std::vector<WindowedSample> train(ordered.begin(), ordered.begin() + static_cast<std::ptrdiff_t>(n_train));
  std::vector<WindowedSample> test(ordered.begin() + static_cast<std::ptrdiff_t>(n_train), ordered.end());
  return {std::move(train), std::move(test)};
}

SyntheticConfig synthetic_config_from(KeyValues& kv) {
  SyntheticConfig cfg;
  cfg.seed = kv.require_uint("seed");
  cfg.ap_count = kv.get_uint("ap_count", cfg.ap_count);
  cfg.area_width = kv.get_double("area_width", cfg.area_width);
  cfg.area_height = kv.get_double("area_height", cfg.area_height);
  const std::string layout = kv.get_string("layout", "line");
  if (layout == "line") {
    cfg.layout = ApLayout::line;
  } else if (layout == "grid") {
    cfg.layout = ApLayout::grid;
  } else if (layout == "mirrored") {
    cfg.layout = ApLayout::mirrored;
  } else {
    throw ConfigError(kv.origin() + ": unknown layout '" + layout + "'");
  }
  cfg.path_loss_exponent = kv.get_double("path_loss_exponent", cfg.path_loss_exponent);
  cfg.ref_power = kv.get_double("ref_power", cfg.ref_power);
  cfg.mirror_power_delta = kv.get_double("mirror_power_delta", cfg.mirror_power_delta);
  cfg.shadow_sigma = kv.get_double("shadow_sigma", cfg.shadow_sigma);
  cfg.threshold = kv.get_double("threshold", cfg.threshold);
  cfg.speed_min = kv.get_double("speed_min", cfg.speed_min);
  cfg.speed_max = kv.get_double("speed_max", cfg.speed_max);
  cfg.steps = kv.get_uint("steps", cfg.steps);
  cfg.name = kv.get_string("name", cfg.name);
  kv.ensure_consumed();

  if (cfg.ap_count < 1) throw ConfigError("ap_count must be >= 1");
  if (cfg.area_width <= 0.0 || cfg.area_height <= 0.0) throw ConfigError("degenerate area");
  if (cfg.threshold < kRssiFloor) throw ConfigError("threshold must be >= -100 dBm");
  if (cfg.speed_min <= 0.0 || cfg.speed_max < cfg.speed_min) throw ConfigError("bad speed range");
  if (cfg.steps < 2) throw ConfigError("steps must be >= 2");
  return cfg;
}

SyntheticConfig parse_synthetic_config(const std::string& path) {
  KeyValues kv = KeyValues::parse_file(path);
  return synthetic_config_from(kv);
}

std::vector<std::vector<ApSite>> ap_sites(const SyntheticConfig& cfg) {
  std::vector<std::vector<ApSite>> dims;
  dims.reserve(cfg.ap_count);
  const double w = cfg.area_width, h = cfg.area_height;
  switch (cfg.layout) {
    case ApLayout::line: {
      for (std::size_t i = 0; i < cfg.ap_count; ++i) {
        const double x = w * (static_cast<double>(i) + 0.5) / static_cast<double>(cfg.ap_count);
        dims.push_back({ApSite{x, h / 2.0, cfg.ref_power}});
      }
      break;
    }
    case ApLayout::grid: {
      const auto cols = static_cast<std::size_t>(
          std::ceil(std::sqrt(static_cast<double>(cfg.ap_count) * w / h)));
      const std::size_t rows = (cfg.ap_count + cols - 1) / cols;
      for (std::size_t i = 0; i < cfg.ap_count; ++i) {
        const std::size_t r = i / cols, c = i % cols;
        dims.push_back({ApSite{w * (static_cast<double>(c) + 0.5) / static_cast<double>(cols),
                               h * (static_cast<double>(r) + 0.5) / static_cast<double>(rows),
                               cfg.ref_power}});
      }
      break;
    }
    case ApLayout::mirrored: {
      // Two co-channel sites per dimension, mirrored about the vertical
      // midline and spread over the left half. The observed value is the
      // stronger reception, so positions x and w - x alias. The twin sits
      // on the next y row, which leaves a faint row-pattern signature as
      // the only clue to the side (besides any power delta).
      for (std::size_t i = 0; i < cfg.ap_count; ++i) {
        const double x = (w / 2.0) * (static_cast<double>(i) + 0.5) / static_cast<double>(cfg.ap_count);
        const double y = h * (static_cast<double>(i % 3) + 0.5) / 3.0;
        const double y_twin = h * (static_cast<double>((i + 1) % 3) + 0.5) / 3.0;
        dims.push_back({ApSite{x, y, cfg.ref_power + cfg.mirror_power_delta},
                        ApSite{w - x, y_twin, cfg.ref_power - cfg.mirror_power_delta}});
      }
      break;
    }
  }
  return dims;
}

TrajectoryDataset generate_synthetic(const SyntheticConfig& cfg) {
  const auto aps = ap_sites(cfg);
  rng::Engine eng(cfg.seed);

  TrajectoryDataset d;
  d.rssi = Tensor(Shape{cfg.steps, cfg.ap_count});
  d.coords = Tensor(Shape{cfg.steps, 2});
  d.name = cfg.name;

  double x = rng::uniform(eng, 0.0, cfg.area_width);
  double y = rng::uniform(eng, 0.0, cfg.area_height);
  double wx = rng::uniform(eng, 0.0, cfg.area_width);
  double wy = rng::uniform(eng, 0.0, cfg.area_height);
  double speed = rng::uniform(eng, cfg.speed_min, cfg.speed_max);

  for (std::size_t t = 0; t < cfg.steps; ++t) {
    d.coords.at(t, 0) = x;
    d.coords.at(t, 1) = y;
    for (std::size_t a = 0; a < cfg.ap_count; ++a) {
      double r = -1e30;  // strongest reception across the dimension's sites
      for (const ApSite& site : aps[a]) {
        const double dist = std::max(std::hypot(x - site.x, y - site.y), 1.0);
        double rx = site.power - 10.0 * cfg.path_loss_exponent * std::log10(dist);
        if (cfg.shadow_sigma > 0.0) rx += rng::normal(eng, 0.0, cfg.shadow_sigma);
        r = std::max(r, rx);
      }
      if (r < cfg.threshold) {
        d.rssi.at(t, a) = kRssiSentinel;
      } else {
        d.rssi.at(t, a) = std::min(0.0, std::max(kRssiFloor, r));
      }
    }
    // Advance the random-waypoint walk.
    const double dx = wx - x, dy = wy - y;
    const double dist = std::hypot(dx, dy);
    if (dist <= speed) {
      x = wx;
      y = wy;
      wx = rng::uniform(eng, 0.0, cfg.area_width);
      wy = rng::uniform(eng, 0.0, cfg.area_height);
      speed = rng::uniform(eng, cfg.speed_min, cfg.speed_max);
    } else {
      x += speed * dx / dist;
      y += speed * dy / dist;
    }
  }
  return d;
}

}  // namespace cmdrnn
