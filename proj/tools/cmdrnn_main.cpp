#include <CLI11.hpp>

#include <charconv>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "cmdrnn/checkpoint.hpp"
#include "cmdrnn/experiment.hpp"

namespace fs = std::filesystem;
using namespace cmdrnn;

namespace {

struct Manifest {
  std::string dataset;
  ModelSpec spec;  // input_dim is taken from the dataset at load time
  TrainConfig cfg;
  double train_fraction = 0.8;
  PredictMode mode = PredictMode::mle;
  std::size_t runs = 5;
  std::vector<std::size_t> k_list = {1, 5, 10, 20, 30};
};

std::vector<std::size_t> parse_k_list(const std::string& text, const std::string& origin) {
  std::vector<std::size_t> ks;
  std::istringstream in(text);
  std::string cell;
  while (std::getline(in, cell, ',')) {
    std::size_t k = 0;
    auto [p, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), k);
    if (ec != std::errc{} || p != cell.data() + cell.size() || k == 0) {
      throw ConfigError(origin + ": bad mixture count '" + cell + "'");
    }
    ks.push_back(k);
  }
  if (ks.empty()) throw ConfigError(origin + ": empty mixture count list");
  return ks;
}

Manifest parse_manifest(const std::string& path) {
  KeyValues kv = KeyValues::parse_file(path);
  Manifest m;
  m.dataset = kv.require_string("dataset");
  // Relative dataset paths resolve against the manifest's directory.
  if (fs::path(m.dataset).is_relative()) {
    m.dataset = (fs::path(path).parent_path() / m.dataset).string();
  }
  m.spec.variant = variant_from_name(kv.get_string("variant", "cmdrnn_gru"));
  m.spec.conv_filters = kv.get_uint("conv_filters", m.spec.conv_filters);
  m.spec.conv_kernel = kv.get_uint("conv_kernel", m.spec.conv_kernel);
  m.spec.conv_stride = static_cast<int>(kv.get_int("conv_stride", m.spec.conv_stride));
  m.spec.pool_window = static_cast<int>(kv.get_int("pool_window", m.spec.pool_window));
  m.spec.pool_stride = static_cast<int>(kv.get_int("pool_stride", m.spec.pool_stride));
  m.spec.hidden = kv.get_uint("hidden", m.spec.hidden);
  m.spec.memory = kv.get_uint("memory", m.spec.memory);
  m.spec.mixtures = kv.get_uint("mixtures", m.spec.mixtures);
  m.spec.mdn_hidden = kv.get_uint("mdn_hidden", m.spec.mdn_hidden);

  m.cfg.epochs = kv.get_uint("epochs", m.cfg.epochs);
  m.cfg.batch = kv.get_uint("batch", m.cfg.batch);
  m.cfg.seed = kv.get_uint("seed", m.cfg.seed);
  m.cfg.lr = kv.get_double("lr", m.cfg.lr);
  m.cfg.rho = kv.get_double("rho", m.cfg.rho);
  m.cfg.eps = kv.get_double("eps", m.cfg.eps);
  m.cfg.clip = kv.get_double("clip", m.cfg.clip);
  const std::string loss = kv.get_string("loss", "auto");
  if (loss == "mse") {
    m.cfg.loss = LossKind::mse;
  } else if (loss == "nll") {
    m.cfg.loss = LossKind::mdn_nll;
  } else if (loss != "auto") {
    throw ConfigError(path + ": loss must be auto, mse or nll");
  }

  m.train_fraction = kv.get_double("train_fraction", m.train_fraction);
  m.mode = predict_mode_from_name(kv.get_string("mode", "mle"));
  m.runs = kv.get_uint("runs", m.runs);
  if (kv.has("k_list")) m.k_list = parse_k_list(kv.get_string("k_list", ""), path);
  kv.ensure_consumed();
  if (m.runs == 0) throw ConfigError(path + ": runs must be >= 1");
  return m;
}

struct LoadedData {
  TrajectoryDataset dataset;
  std::vector<WindowedSample> train_set;
  std::vector<WindowedSample> test_set;
};

LoadedData load_split(Manifest& m) {
  LoadedData d;
  d.dataset = load_csv(m.dataset);
  m.spec.input_dim = d.dataset.dims();
  auto windows = make_windows(d.dataset, m.spec.memory);
  std::tie(d.train_set, d.test_set) = split(windows, m.train_fraction);
  return d;
}

std::string format_double(double v) {
  char buf[32];
  auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, p);
}

void append_metrics_row(const std::string& path, const RunRecord& r) {
  const bool fresh = !fs::exists(path);
  std::ofstream out(path, std::ios::app);
  if (!out) throw IoError("cannot write metrics '" + path + "'");
  if (fresh) out << "variant,K,seed,rmse,final_loss,seconds\n";
  out << r.variant << ',' << r.mixtures << ',' << r.seed << ',' << format_double(r.rmse) << ','
      << format_double(r.final_loss) << ',' << format_double(r.seconds) << '\n';
}

void print_summaries(const std::vector<Summary>& summaries) {
  std::printf("%-16s %4s %6s %12s %12s %12s\n", "variant", "K", "runs", "mean_rmse", "std_rmse",
              "median_rmse");
  for (const auto& s : summaries) {
    if (s.completed == 0) {
      std::printf("%-16s %4zu %6zu %12s %12s %12s\n", s.variant.c_str(), s.mixtures, s.completed, "FAILED",
                  "FAILED", "FAILED");
    } else {
      std::printf("%-16s %4zu %6zu %12.4f %12.4f %12.4f\n", s.variant.c_str(), s.mixtures, s.completed,
                  s.mean_rmse, s.std_rmse, s.median_rmse);
    }
  }
}

int cmd_generate(const std::string& config_path, const std::string& out_path,
                 std::optional<std::uint64_t> seed) {
  SyntheticConfig cfg = parse_synthetic_config(config_path);
  if (seed) cfg.seed = *seed;
  TrajectoryDataset d = generate_synthetic(cfg);
  save_csv(d, out_path);
  std::printf("wrote %s: %zu steps, %zu access points, seed %llu\n", out_path.c_str(), d.steps(), d.dims(),
              static_cast<unsigned long long>(cfg.seed));
  return 0;
}

int cmd_train(const std::string& manifest_path, const std::string& out_dir,
              std::optional<std::uint64_t> seed) {
  Manifest m = parse_manifest(manifest_path);
  if (seed) m.cfg.seed = *seed;
  LoadedData data = load_split(m);

  Model model = Model::build(m.spec, m.cfg.seed);
  TrainResult result = train(model, data.train_set, m.cfg);

  fs::create_directories(out_dir);
  const std::string ckpt_path = (fs::path(out_dir) / "model.ckpt").string();
  save_checkpoint(model, ckpt_path);

  const std::string trace_path = (fs::path(out_dir) / "loss_trace.csv").string();
  std::ofstream trace(trace_path, std::ios::trunc);
  if (!trace) throw IoError("cannot write '" + trace_path + "'");
  trace << "epoch,loss\n";
  for (std::size_t e = 0; e < result.epoch_loss.size(); ++e) {
    trace << e << ',' << format_double(result.epoch_loss[e]) << '\n';
  }

  const double train_rmse = evaluate_rmse(model, data.train_set, m.mode, m.cfg.seed);
  const double test_rmse = evaluate_rmse(model, data.test_set, m.mode, m.cfg.seed);
  std::printf("trained %s for %zu epochs: loss %.6f -> %.6f, rmse train %.4f test %.4f\n",
              variant_name(m.spec.variant), m.cfg.epochs, result.epoch_loss.front(),
              result.epoch_loss.back(), train_rmse, test_rmse);
  std::printf("checkpoint: %s\n", ckpt_path.c_str());
  return 0;
}

int cmd_eval(const std::string& ckpt_path, const std::string& dataset_path, const std::string& mode_name,
             std::uint64_t seed, const std::string& metrics_path, bool stable_timings) {
  const PredictMode mode = predict_mode_from_name(mode_name);
  Model model = load_checkpoint(ckpt_path);
  TrajectoryDataset d = load_csv(dataset_path);
  if (d.dims() != model.spec().input_dim) {
    throw ConfigError("dataset has " + std::to_string(d.dims()) + " access points, checkpoint expects " +
                      std::to_string(model.spec().input_dim));
  }
  auto windows = make_windows(d, model.spec().memory);

  const auto t0 = std::chrono::steady_clock::now();
  RunRecord rec;
  rec.variant = variant_name(model.spec().variant);
  rec.mixtures = model.spec().has_mdn() ? model.spec().mixtures : 0;
  rec.seed = seed;
  rec.rmse = evaluate_rmse(model, windows, mode, seed);
  rec.final_loss = evaluate_loss(model, windows);
  const auto t1 = std::chrono::steady_clock::now();
  rec.seconds = stable_timings ? 0.0 : std::chrono::duration<double>(t1 - t0).count();

  if (!metrics_path.empty()) append_metrics_row(metrics_path, rec);
  std::printf("%s,%zu,%llu,%s,%s,%s\n", rec.variant.c_str(), rec.mixtures,
              static_cast<unsigned long long>(rec.seed), format_double(rec.rmse).c_str(),
              format_double(rec.final_loss).c_str(), format_double(rec.seconds).c_str());
  return 0;
}

int cmd_compare(const std::string& manifest_path, const std::string& out_dir, std::size_t jobs,
                bool stable_timings) {
  Manifest m = parse_manifest(manifest_path);
  if (m.runs < 2) throw ConfigError("compare needs runs >= 2 for a std estimate");
  LoadedData data = load_split(m);

  ExperimentPlan plan;
  plan.base_spec = m.spec;
  plan.train_cfg = m.cfg;
  plan.train_fraction = m.train_fraction;
  plan.mode = m.mode;
  plan.runs = m.runs;
  plan.jobs = jobs;
  plan.base_seed = m.cfg.seed;
  plan.stable_timings = stable_timings;

  const auto records = run_compare(data.train_set, data.test_set, plan);
  const auto summaries = summarize(records);

  fs::create_directories(out_dir);
  write_metrics_csv((fs::path(out_dir) / "compare_runs.csv").string(), records);
  write_summary_csv((fs::path(out_dir) / "compare_summary.csv").string(), summaries);
  write_compare_svg((fs::path(out_dir) / "compare.svg").string(), summaries);
  print_summaries(summaries);
  for (const auto& r : records) {
    if (r.failed) std::fprintf(stderr, "FAILED %s seed %llu: %s\n", r.variant.c_str(),
                               static_cast<unsigned long long>(r.seed), r.error.c_str());
  }
  return 0;
}

int cmd_sweep(const std::string& manifest_path, const std::string& k_arg, const std::string& out_dir,
              std::size_t jobs, bool stable_timings) {
  Manifest m = parse_manifest(manifest_path);
  if (!k_arg.empty()) m.k_list = parse_k_list(k_arg, "--k");
  LoadedData data = load_split(m);

  ExperimentPlan plan;
  plan.base_spec = m.spec;
  plan.train_cfg = m.cfg;
  plan.train_fraction = m.train_fraction;
  plan.mode = m.mode;
  plan.runs = m.runs;
  plan.jobs = jobs;
  plan.base_seed = m.cfg.seed;
  plan.stable_timings = stable_timings;

  const auto records = run_sweep(data.train_set, data.test_set, m.k_list, plan);
  const auto summaries = summarize(records);

  fs::create_directories(out_dir);
  write_metrics_csv((fs::path(out_dir) / "sweep_runs.csv").string(), records);
  write_summary_csv((fs::path(out_dir) / "sweep_summary.csv").string(), summaries);
  write_sweep_svg((fs::path(out_dir) / "sweep.svg").string(), summaries);
  print_summaries(summaries);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"CMDRNN trainer and evaluation harness for RSSI trajectory prediction"};
  app.require_subcommand(1);

  std::string config_path, manifest_path, out_path, out_dir = "out";
  std::string ckpt_path, dataset_path, mode_name = "mle", metrics_path, k_arg;
  std::uint64_t seed_flag = 0;
  bool seed_set = false;
  std::size_t jobs = 1;
  bool stable_timings = false;

  app.add_option("--jobs", jobs, "concurrent runs for compare/sweep")->capture_default_str();
  app.add_flag("--stable-timings", stable_timings, "write seconds as 0 for byte-reproducible outputs");

  auto* gen = app.add_subcommand("generate", "generate a synthetic RSSI trajectory CSV");
  gen->add_option("--config", config_path, "synthetic config file")->required();
  gen->add_option("--out", out_path, "output CSV path")->required();
  gen->add_option("--seed", seed_flag, "override config seed")->each([&](const std::string&) { seed_set = true; });

  auto* tr = app.add_subcommand("train", "train one model per the manifest");
  tr->add_option("--manifest", manifest_path, "experiment manifest")->required();
  tr->add_option("--out-dir", out_dir, "output directory")->capture_default_str();
  tr->add_option("--seed", seed_flag, "override manifest seed")->each([&](const std::string&) { seed_set = true; });

  auto* ev = app.add_subcommand("eval", "evaluate a checkpoint on a dataset");
  ev->add_option("--checkpoint", ckpt_path, "checkpoint path")->required();
  ev->add_option("--dataset", dataset_path, "dataset CSV")->required();
  ev->add_option("--mode", mode_name, "mle | mixture-mean | sample")->capture_default_str();
  ev->add_option("--seed", seed_flag, "sampling seed");
  ev->add_option("--metrics", metrics_path, "metrics CSV to append to");

  auto* cm = app.add_subcommand("compare", "train all six variants across seeds");
  cm->add_option("--manifest", manifest_path, "experiment manifest")->required();
  cm->add_option("--out-dir", out_dir, "output directory")->capture_default_str();

  auto* sw = app.add_subcommand("sweep", "sweep mixture counts for cmdrnn_gru");
  sw->add_option("--manifest", manifest_path, "experiment manifest")->required();
  sw->add_option("--k", k_arg, "comma-separated mixture counts (overrides manifest)");
  sw->add_option("--out-dir", out_dir, "output directory")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    const std::optional<std::uint64_t> seed_opt =
        seed_set ? std::optional<std::uint64_t>(seed_flag) : std::nullopt;
    if (app.got_subcommand(gen)) return cmd_generate(config_path, out_path, seed_opt);
    if (app.got_subcommand(tr)) return cmd_train(manifest_path, out_dir, seed_opt);
    if (app.got_subcommand(ev)) {
      return cmd_eval(ckpt_path, dataset_path, mode_name, seed_flag, metrics_path, stable_timings);
    }
    if (app.got_subcommand(cm)) return cmd_compare(manifest_path, out_dir, jobs, stable_timings);
    if (app.got_subcommand(sw)) return cmd_sweep(manifest_path, k_arg, out_dir, jobs, stable_timings);
  } catch (const NumericError& e) {
    std::fprintf(stderr, "numerical abort: %s\n", e.what());
    return 3;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 2;
}
