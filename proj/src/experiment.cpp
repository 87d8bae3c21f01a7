#include "cmdrnn/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <sstream>
#include <thread>

#include "cmdrnn/svg.hpp"

namespace cmdrnn {

namespace {

struct Task {
  Variant variant;
  std::size_t mixtures;
  std::uint64_t seed;
};

std::string format_double(double v) {
  char buf[32];
  auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, p);
}

RunRecord execute(const Task& task, const std::vector<WindowedSample>& train_set,
                  const std::vector<WindowedSample>& test_set, const ExperimentPlan& plan) {
  RunRecord rec;
  rec.variant = variant_name(task.variant);
  rec.seed = task.seed;

  ModelSpec spec = plan.base_spec;
  spec.variant = task.variant;
  spec.mixtures = task.mixtures ? task.mixtures : spec.mixtures;
  rec.mixtures = spec.has_mdn() ? spec.mixtures : 0;

  TrainConfig cfg = plan.train_cfg;
  cfg.seed = task.seed;

  const auto t0 = std::chrono::steady_clock::now();
  try {
    Model model = Model::build(spec, task.seed);
    TrainResult tr = train(model, train_set, cfg);
    rec.final_loss = tr.epoch_loss.back();
    rec.rmse = evaluate_rmse(model, test_set, plan.mode, task.seed);
  } catch (const std::exception& e) {
    rec.failed = true;
    rec.error = e.what();
  }
  const auto t1 = std::chrono::steady_clock::now();
  rec.seconds = plan.stable_timings ? 0.0 : std::chrono::duration<double>(t1 - t0).count();
  return rec;
}

std::vector<RunRecord> run_tasks(const std::vector<Task>& tasks,
                                 const std::vector<WindowedSample>& train_set,
                                 const std::vector<WindowedSample>& test_set, const ExperimentPlan& plan) {
  std::vector<RunRecord> records(tasks.size());
  const std::size_t jobs = std::max<std::size_t>(1, plan.jobs);
  if (jobs == 1) {
    for (std::size_t i = 0; i < tasks.size(); ++i) records[i] = execute(tasks[i], train_set, test_set, plan);
    return records;
  }
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= tasks.size()) return;
      records[i] = execute(tasks[i], train_set, test_set, plan);
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t j = 0; j < std::min(jobs, tasks.size()); ++j) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
  return records;
}

}  // namespace

std::vector<RunRecord> run_compare(const std::vector<WindowedSample>& train_set,
                                   const std::vector<WindowedSample>& test_set, const ExperimentPlan& plan) {
  std::vector<Task> tasks;
  for (Variant v : {Variant::rnn, Variant::cnn_rnn, Variant::rnn_mdn, Variant::cmdrnn_vanilla,
                    Variant::cmdrnn_lstm, Variant::cmdrnn_gru}) {
    for (std::size_t i = 0; i < plan.runs; ++i) {
      tasks.push_back(Task{v, plan.base_spec.mixtures, plan.base_seed + i});
    }
  }
  return run_tasks(tasks, train_set, test_set, plan);
}

std::vector<RunRecord> run_sweep(const std::vector<WindowedSample>& train_set,
                                 const std::vector<WindowedSample>& test_set,
                                 const std::vector<std::size_t>& k_list, const ExperimentPlan& plan) {
  if (k_list.empty()) throw ConfigError("sweep needs at least one mixture count");
  for (std::size_t k : k_list) {
    if (k == 0) throw ConfigError("mixture counts must be >= 1");
  }
  std::vector<Task> tasks;
  for (std::size_t k : k_list) {
    for (std::size_t i = 0; i < plan.runs; ++i) {
      tasks.push_back(Task{Variant::cmdrnn_gru, k, plan.base_seed + i});
    }
  }
  return run_tasks(tasks, train_set, test_set, plan);
}

std::vector<Summary> summarize(const std::vector<RunRecord>& records) {
  std::vector<Summary> out;
  auto find = [&](const RunRecord& r) -> Summary& {
    for (auto& s : out) {
      if (s.variant == r.variant && s.mixtures == r.mixtures) return s;
    }
    out.push_back(Summary{r.variant, r.mixtures, 0, 0, 0.0, 0.0, 0.0});
    return out.back();
  };
  for (const auto& r : records) {
    Summary& s = find(r);
    if (r.failed) {
      ++s.failed;
    } else {
      ++s.completed;
    }
  }
  for (auto& s : out) {
    std::vector<double> xs;
    for (const auto& r : records) {
      if (!r.failed && r.variant == s.variant && r.mixtures == s.mixtures) xs.push_back(r.rmse);
    }
    if (xs.empty()) continue;
    double mean = 0.0;
    for (double x : xs) mean += x;
    mean /= static_cast<double>(xs.size());
    double var = 0.0;
    for (double x : xs) var += (x - mean) * (x - mean);
    s.mean_rmse = mean;
    s.std_rmse = xs.size() > 1 ? std::sqrt(var / static_cast<double>(xs.size() - 1)) : 0.0;
    std::sort(xs.begin(), xs.end());
    const std::size_t n = xs.size();
    s.median_rmse = n % 2 ? xs[n / 2] : 0.5 * (xs[n / 2 - 1] + xs[n / 2]);
  }
  return out;
}

void write_metrics_csv(const std::string& path, const std::vector<RunRecord>& records) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write metrics '" + path + "'");
  out << "variant,K,seed,rmse,final_loss,seconds\n";
  for (const auto& r : records) {
    out << r.variant << ',' << r.mixtures << ',' << r.seed << ',';
    if (r.failed) {
      out << "FAILED,FAILED," << format_double(r.seconds) << '\n';
    } else {
      out << format_double(r.rmse) << ',' << format_double(r.final_loss) << ','
          << format_double(r.seconds) << '\n';
    }
  }
  if (!out) throw IoError("write failed for metrics '" + path + "'");
}

std::vector<RunRecord> read_metrics_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open metrics '" + path + "'");
  std::string line;
  if (!std::getline(in, line) || line != "variant,K,seed,rmse,final_loss,seconds") {
    throw ParseError(path + ":1: bad metrics header");
  }
  std::vector<RunRecord> records;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string cell;
    std::vector<std::string> cells;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (cells.size() != 6) {
      throw ParseError(path + ":" + std::to_string(lineno) + ": expected 6 cells");
    }
    RunRecord r;
    r.variant = cells[0];
    r.mixtures = std::stoull(cells[1]);
    r.seed = std::stoull(cells[2]);
    if (cells[3] == "FAILED") {
      r.failed = true;
    } else {
      r.rmse = std::stod(cells[3]);
      r.final_loss = std::stod(cells[4]);
    }
    r.seconds = std::stod(cells[5]);
    records.push_back(std::move(r));
  }
  return records;
}

void write_summary_csv(const std::string& path, const std::vector<Summary>& summaries) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write summary '" + path + "'");
  out << "variant,K,runs,failed,mean_rmse,std_rmse,median_rmse\n";
  for (const auto& s : summaries) {
    out << s.variant << ',' << s.mixtures << ',' << s.completed << ',' << s.failed << ','
        << format_double(s.mean_rmse) << ',' << format_double(s.std_rmse) << ','
        << format_double(s.median_rmse) << '\n';
  }
  if (!out) throw IoError("write failed for summary '" + path + "'");
}

namespace {

constexpr double kW = 640.0, kH = 400.0;
constexpr double kLeft = 70.0, kRight = 20.0, kTop = 30.0, kBottom = 70.0;

double axis_max(const std::vector<Summary>& summaries) {
  double top = 0.0;
  for (const auto& s : summaries) top = std::max(top, s.mean_rmse + s.std_rmse);
  return top > 0.0 ? top * 1.15 : 1.0;
}

void draw_axes(SvgCanvas& svg, double y_max, const std::string& y_label) {
  svg.line(kLeft, kH - kBottom, kW - kRight, kH - kBottom);
  svg.line(kLeft, kTop, kLeft, kH - kBottom);
  for (int i = 0; i <= 4; ++i) {
    const double frac = static_cast<double>(i) / 4.0;
    const double y = kH - kBottom - frac * (kH - kTop - kBottom);
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.3g", frac * y_max);
    svg.line(kLeft - 4, y, kLeft, y);
    svg.text(kLeft - 8, y + 4, buf, 11, "end");
  }
  svg.text(14, kTop - 10, y_label, 12);
}

}  // namespace

void write_compare_svg(const std::string& path, const std::vector<Summary>& summaries) {
  SvgCanvas svg(kW, kH);
  const double y_max = axis_max(summaries);
  draw_axes(svg, y_max, "RMSE");
  const double plot_w = kW - kLeft - kRight;
  const double plot_h = kH - kTop - kBottom;
  const double n = static_cast<double>(summaries.size());
  const double slot = plot_w / std::max(1.0, n);
  for (std::size_t i = 0; i < summaries.size(); ++i) {
    const Summary& s = summaries[i];
    const double cx = kLeft + (static_cast<double>(i) + 0.5) * slot;
    const double bw = slot * 0.6;
    if (s.completed > 0) {
      const double h = plot_h * s.mean_rmse / y_max;
      svg.rect(cx - bw / 2, kH - kBottom - h, bw, h, "#4878a8");
      const double e0 = kH - kBottom - plot_h * std::max(0.0, s.mean_rmse - s.std_rmse) / y_max;
      const double e1 = kH - kBottom - plot_h * (s.mean_rmse + s.std_rmse) / y_max;
      svg.line(cx, e0, cx, e1, "#222", 1.5);
      svg.line(cx - 5, e0, cx + 5, e0, "#222", 1.5);
      svg.line(cx - 5, e1, cx + 5, e1, "#222", 1.5);
    } else {
      svg.text(cx, kH - kBottom - 10, "FAILED", 11, "middle");
    }
    svg.text(cx, kH - kBottom + 16 + static_cast<double>(i % 2) * 14, s.variant, 10, "middle");
  }
  svg.save(path);
}

void write_sweep_svg(const std::string& path, const std::vector<Summary>& summaries) {
  SvgCanvas svg(kW, kH);
  const double y_max = axis_max(summaries);
  draw_axes(svg, y_max, "RMSE vs mixture count");
  const double plot_w = kW - kLeft - kRight;
  const double plot_h = kH - kTop - kBottom;
  double k_max = 1.0;
  for (const auto& s : summaries) k_max = std::max(k_max, static_cast<double>(s.mixtures));
  auto xpos = [&](std::size_t k) { return kLeft + plot_w * static_cast<double>(k) / (k_max * 1.05); };
  auto ypos = [&](double v) { return kH - kBottom - plot_h * v / y_max; };

  std::vector<std::pair<double, double>> pts;
  for (const auto& s : summaries) {
    if (s.completed == 0) continue;
    const double x = xpos(s.mixtures), y = ypos(s.mean_rmse);
    pts.emplace_back(x, y);
    const double e0 = ypos(std::max(0.0, s.mean_rmse - s.std_rmse));
    const double e1 = ypos(s.mean_rmse + s.std_rmse);
    svg.line(x, e0, x, e1, "#222", 1.5);
    svg.line(x - 5, e0, x + 5, e0, "#222", 1.5);
    svg.line(x - 5, e1, x + 5, e1, "#222", 1.5);
    svg.circle(x, y, 3.5, "#a84848");
    svg.text(x, kH - kBottom + 16, "K=" + std::to_string(s.mixtures), 10, "middle");
  }
  if (pts.size() > 1) svg.polyline(pts, "#a84848", 1.5);
  svg.save(path);
}

}  // namespace cmdrnn
