#pragma once

#include <string>
#include <utility>
#include <vector>

#include "cmdrnn/keyval.hpp"
#include "cmdrnn/rng.hpp"
#include "cmdrnn/tensor.hpp"

namespace cmdrnn {

// Detected RSSI values live in [-100, 0]; an undetected access point is
// encoded as the sentinel 100.
inline constexpr double kRssiSentinel = 100.0;
inline constexpr double kRssiFloor = -100.0;

struct TrajectoryDataset {
  Tensor rssi;    // (T x D), raw values: [-100, 0] or sentinel
  Tensor coords;  // (T x 2), meters
  std::string name;

  std::size_t steps() const { return rssi.rank() == 2 ? rssi.extent(0) : 0; }
  std::size_t dims() const { return rssi.rank() == 2 ? rssi.extent(1) : 0; }
};

// CSV with header `rssi_0,...,rssi_{D-1},x,y`, one scan per row in
// chronological order. Rejects ragged rows, non-numeric cells and RSSI
// values outside the valid range, naming the offending line.
TrajectoryDataset load_csv(const std::string& path);
void save_csv(const TrajectoryDataset& d, const std::string& path);

// Detected r -> (r + 100) / 100 in [0, 1]; sentinel -> 0 (same as the -100
// floor, i.e. "no signal").
Tensor normalize_rssi(const TrajectoryDataset& d);
double normalize_rssi_value(double r);

struct WindowedSample {
  Tensor inputs;  // (memory x D), normalized
  Tensor target;  // (2), coordinates at the step after the window
};

// Exactly T - memory samples, time ordered; sample i covers rows
// [i, i+memory) and targets coords[i+memory].
std::vector<WindowedSample> make_windows(const TrajectoryDataset& d, std::size_t memory);

// Chronological by default: train takes the first floor(fraction * n)
// samples. Random split shuffles with the given seed first.
std::pair<std::vector<WindowedSample>, std::vector<WindowedSample>> split(
    const std::vector<WindowedSample>& samples, double train_fraction, bool chronological = true,
    std::uint64_t seed = 0);

// line/grid: one transmitter per observed dimension. mirrored: every
// dimension is served by two co-channel transmitters placed symmetrically
// about the vertical midline, and the receiver reports the stronger
// reception; fingerprints at x and (width - x) then nearly coincide and the
// inverse map becomes two-valued.
enum class ApLayout { line, grid, mirrored };

struct SyntheticConfig {
  std::size_t ap_count = 48;  // observed vector dimensions
  double area_width = 50.0;   // meters
  double area_height = 10.0;
  ApLayout layout = ApLayout::line;
  double path_loss_exponent = 2.5;
  double ref_power = -30.0;      // dBm at 1 m
  // Mirrored layout only: the left site of each pair transmits at
  // ref_power + delta, the right at ref_power - delta. Zero keeps the
  // geometry perfectly ambiguous; a small delta makes the side recoverable
  // from the received levels.
  double mirror_power_delta = 0.0;
  double shadow_sigma = 4.0;     // dB
  double threshold = -90.0;      // dBm, below -> sentinel
  double speed_min = 0.6;        // m per step
  double speed_max = 1.4;
  std::size_t steps = 600;
  std::uint64_t seed = 0;        // mandatory in config files
  std::string name = "synthetic";
};

struct ApSite {
  double x = 0.0;
  double y = 0.0;
  double power = 0.0;  // dBm at 1 m
};

SyntheticConfig parse_synthetic_config(const std::string& path);
SyntheticConfig synthetic_config_from(KeyValues& kv);

// Random-waypoint walk over the area; per access point
// rssi = ref_power - 10 n log10(max(dist, 1 m)) + Normal(0, shadow_sigma),
// clamped to [-100, 0], replaced by the sentinel below the threshold.
// Fully determined by cfg.seed.
TrajectoryDataset generate_synthetic(const SyntheticConfig& cfg);

// Transmitter sites serving each observed dimension (one for line/grid, two
// for mirrored); exposed for tests and plots.
std::vector<std::vector<ApSite>> ap_sites(const SyntheticConfig& cfg);

}  // namespace cmdrnn
