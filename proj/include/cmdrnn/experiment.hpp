#pragma once

#include <string>
#include <vector>

#include "cmdrnn/train.hpp"

namespace cmdrnn {

// One (variant, K, seed) training-plus-evaluation run.
struct RunRecord {
  std::string variant;
  std::size_t mixtures = 0;  // 0 for variants without a mixture head
  std::uint64_t seed = 0;
  double rmse = 0.0;
  double final_loss = 0.0;
  double seconds = 0.0;
  bool failed = false;
  std::string error;
};

struct Summary {
  std::string variant;
  std::size_t mixtures = 0;
  std::size_t completed = 0;
  std::size_t failed = 0;
  double mean_rmse = 0.0;
  double std_rmse = 0.0;   // sample std over completed runs
  double median_rmse = 0.0;
};

struct ExperimentPlan {
  ModelSpec base_spec;      // variant/mixtures overridden per task
  TrainConfig train_cfg;    // seed overridden per run
  double train_fraction = 0.8;
  PredictMode mode = PredictMode::mle;
  std::size_t runs = 5;
  std::size_t jobs = 1;
  std::uint64_t base_seed = 0;  // run i uses base_seed + i
  bool stable_timings = false;  // write seconds as 0 for reproducible output
};

// Trains all six variants x plan.runs seeds; failures are recorded per cell
// rather than aborting the table.
std::vector<RunRecord> run_compare(const std::vector<WindowedSample>& train_set,
                                   const std::vector<WindowedSample>& test_set, const ExperimentPlan& plan);

// cmdrnn_gru across the mixture counts in k_list.
std::vector<RunRecord> run_sweep(const std::vector<WindowedSample>& train_set,
                                 const std::vector<WindowedSample>& test_set,
                                 const std::vector<std::size_t>& k_list, const ExperimentPlan& plan);

// Groups records by (variant, K) in first-appearance order.
std::vector<Summary> summarize(const std::vector<RunRecord>& records);

// Header: variant,K,seed,rmse,final_loss,seconds. Failed cells carry FAILED
// in the rmse and final_loss columns.
void write_metrics_csv(const std::string& path, const std::vector<RunRecord>& records);
std::vector<RunRecord> read_metrics_csv(const std::string& path);

void write_summary_csv(const std::string& path, const std::vector<Summary>& summaries);

// Bar chart of mean RMSE with std whiskers, one bar per variant.
void write_compare_svg(const std::string& path, const std::vector<Summary>& summaries);
// Mean RMSE vs mixture count with std bars.
void write_sweep_svg(const std::string& path, const std::vector<Summary>& summaries);

}  // namespace cmdrnn
