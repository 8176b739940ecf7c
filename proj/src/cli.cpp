#include "robustlab/cli.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "robustlab/checkpoint.hpp"
#include "robustlab/config.hpp"
#include "robustlab/report.hpp"

namespace robustlab::cli {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error(path + ": cannot open for writing");
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw std::runtime_error(path + ": write failed");
}

json gap_to_json(const GapReport& g, const char* metric) {
  return json{{"metric", metric},        {"final_mean", g.final_mean}, {"final_std", g.final_std},
              {"best_err", g.best_err},  {"best_epoch", g.best_epoch}, {"diff", g.diff}};
}

// Logs shorter than the 5-epoch protocol window still get a bookkeeping
// report averaged over what exists.
GapReport gap_report_or_short(const RunLog& log) {
  if (log.records.size() >= 5) return gap_report(log, GapMetric::test_robust_err);
  GapReport g;
  const size_t n = log.records.size();
  double sum = 0.0;
  for (const auto& r : log.records) sum += r.test_robust_err;
  g.final_mean = sum / static_cast<double>(n);
  double var = 0.0;
  for (const auto& r : log.records) {
    const double d = r.test_robust_err - g.final_mean;
    var += d * d;
  }
  g.final_std = std::sqrt(var / static_cast<double>(n));
  g.best_err = log.records[0].test_robust_err;
  g.best_epoch = log.records[0].epoch;
  for (const auto& r : log.records) {
    if (r.test_robust_err < g.best_err) {
      g.best_err = r.test_robust_err;
      g.best_epoch = r.epoch;
    }
  }
  g.diff = g.final_mean - g.best_err;
  return g;
}

// Runs one training job into out_dir: resolved_config.json, checkpoints,
// runlog.csv, gap_report.json.
GapReport run_training(const RunConfigDocument& cfg, const std::string& out_dir) {
  const json resolved = resolve_config(cfg);
  const std::string digest = config_digest(resolved);

  fs::create_directories(out_dir);
  write_text(out_dir + "/resolved_config.json", resolved.dump(2) + "\n");

  const TrainData data = load_train_data(cfg.data);

  TrainHooks hooks;
  hooks.checkpoint_dir = out_dir + "/checkpoints";
  hooks.config_digest = digest;
  const RunLog log = train(cfg.train, data, hooks);

  write_runlog_csv(log, out_dir + "/runlog.csv");

  const GapReport gap = gap_report_or_short(log);
  json report = gap_to_json(gap, "test_robust_err");
  if (!log.records.empty() && log.records.front().val_robust_err) {
    const EarlyStopChoice choice = select_early_stop(log);
    report["early_stop"] = json{{"epoch", choice.epoch}, {"checkpoint", choice.checkpoint}};
  }
  write_text(out_dir + "/gap_report.json", report.dump(2) + "\n");
  return gap;
}

int sweep_workers() {
  const char* env = std::getenv("ROBUSTLAB_WORKERS");
  if (!env) return 1;
  const int v = std::atoi(env);
  return v < 1 ? 1 : v;
}

std::string value_token(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

int guarded(const std::function<void()>& body) {
  try {
    body();
    return kExitOk;
  } catch (const ConfigError& e) {
    std::cerr << e.what() << "\n";
    return kExitConfig;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
}

}  // namespace

int run(const std::vector<std::string>& args) {
  CLI::App app{"robustlab: a desk-scale adversarial-training laboratory"};
  app.require_subcommand(1);

  // ---- train ----
  auto* train_cmd = app.add_subcommand("train", "run one training job from a JSON config");
  std::string train_config_path, train_out;
  int64_t train_seed = -1;
  train_cmd->add_option("--config", train_config_path, "run config JSON")->required();
  train_cmd->add_option("--out", train_out, "output directory")->required();
  train_cmd->add_option("--seed", train_seed, "override the config seed");

  // ---- eval ----
  auto* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint under an adversary");
  std::string eval_ckpt, eval_images, eval_labels, eval_norm = "linf";
  double eval_eps = 8.0 / 255.0, eval_alpha = -1.0;
  int eval_steps = 10, eval_restarts = 1, eval_subsample = 0, eval_batch = 128;
  int64_t eval_seed = 0;
  bool eval_no_random_init = false;
  eval_cmd->add_option("--checkpoint", eval_ckpt, "AROF1 checkpoint")->required();
  eval_cmd->add_option("--images", eval_images, "IDX images")->required();
  eval_cmd->add_option("--labels", eval_labels, "IDX labels")->required();
  eval_cmd->add_option("--norm", eval_norm, "linf or l2")->check(CLI::IsMember({"linf", "l2"}));
  eval_cmd->add_option("--eps", eval_eps, "perturbation radius (default 8/255)");
  eval_cmd->add_option("--steps", eval_steps, "attack steps (default 10)");
  eval_cmd->add_option("--alpha", eval_alpha, "step size (default 2/255 linf, 15/255 l2)");
  eval_cmd->add_option("--restarts", eval_restarts, "attack restarts (default 1)");
  eval_cmd->add_option("--seed", eval_seed, "evaluation seed");
  eval_cmd->add_option("--subsample", eval_subsample, "evaluate a seeded subsample of this size");
  eval_cmd->add_option("--batch-size", eval_batch, "evaluation batch size");
  eval_cmd->add_flag("--no-random-init", eval_no_random_init, "start the adversary at delta = 0");

  // ---- sweep ----
  auto* sweep_cmd = app.add_subcommand("sweep", "train one run per axis value");
  std::string sweep_config_path, sweep_axis, sweep_values, sweep_out;
  sweep_cmd->add_option("--config", sweep_config_path, "base run config JSON")->required();
  sweep_cmd->add_option("--axis", sweep_axis, "width, l1, l2, cutout or mixup")
      ->required()
      ->check(CLI::IsMember({"width", "l1", "l2", "cutout", "mixup"}));
  sweep_cmd->add_option("--values", sweep_values, "comma-separated axis values")->required();
  sweep_cmd->add_option("--out", sweep_out, "output directory")->required();

  // ---- report ----
  auto* report_cmd = app.add_subcommand("report", "plot learning curves and print the gap table");
  std::vector<std::string> report_runs;
  std::string report_plot;
  report_cmd->add_option("--runs", report_runs, "run directories containing runlog.csv")->required();
  report_cmd->add_option("--plot", report_plot, "output SVG path")->required();

  // ---- gen-data ----
  auto* gen_cmd = app.add_subcommand("gen-data", "write a synthetic patterned IDX dataset");
  std::string gen_out;
  int gen_n = 5000, gen_test_n = 1000, gen_unlabeled_n = 0, gen_side = 28, gen_classes = 10;
  double gen_noise = 0.08;
  int64_t gen_seed = 7;
  gen_cmd->add_option("--out", gen_out, "output directory")->required();
  gen_cmd->add_option("--n", gen_n, "training examples");
  gen_cmd->add_option("--test-n", gen_test_n, "test examples");
  gen_cmd->add_option("--unlabeled-n", gen_unlabeled_n, "unlabeled examples");
  gen_cmd->add_option("--side", gen_side, "image side length");
  gen_cmd->add_option("--classes", gen_classes, "number of classes");
  gen_cmd->add_option("--noise", gen_noise, "pixel noise level");
  gen_cmd->add_option("--seed", gen_seed, "generator seed");

  std::vector<const char*> argv;
  argv.push_back("robustlab");
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  if (train_cmd->parsed()) {
    RunConfigDocument cfg;
    try {
      cfg = load_config_file(train_config_path);
      if (train_seed >= 0) cfg.train.seed = static_cast<uint64_t>(train_seed);
    } catch (const std::exception& e) {
      std::cerr << e.what() << "\n";
      return kExitConfig;
    }
    // surface missing datasets as config errors before training starts
    try {
      load_train_data(cfg.data);
    } catch (const std::exception& e) {
      std::cerr << "config: data: " << e.what() << "\n";
      return kExitConfig;
    }
    return guarded([&] {
      const auto t0 = std::chrono::steady_clock::now();
      const GapReport gap = run_training(cfg, train_out);
      const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      std::cerr << "train: done in " << value_token(secs) << "s; best " << gap.best_err
                << " at epoch " << gap.best_epoch << ", final " << gap.final_mean << " (diff "
                << gap.diff << ")\n";
    });
  }

  if (eval_cmd->parsed()) {
    return guarded([&] {
      LoadedCheckpoint ckpt;
      Dataset ds;
      try {
        ckpt = load_checkpoint(eval_ckpt);
        ds = load_idx(eval_images, eval_labels);
      } catch (const std::exception& e) {
        throw ConfigError(e.what());
      }
      PerturbationModel pm;
      pm.norm = eval_norm == "l2" ? Norm::l2 : Norm::linf;
      pm.eps = static_cast<float>(eval_eps);
      AttackSpec attack;
      attack.kind = AttackKind::pgd;
      attack.steps = eval_steps;
      attack.step_size = eval_alpha > 0.0 ? static_cast<float>(eval_alpha)
                                          : (pm.norm == Norm::linf ? 2.0f / 255.0f : 15.0f / 255.0f);
      attack.random_init = !eval_no_random_init;
      attack.restarts = eval_restarts;
      const EvalResult res = evaluate(ckpt.model, ds, pm, attack,
                                      static_cast<uint64_t>(eval_seed), eval_subsample, eval_batch);
      const json out = {
          {"robust_err", res.robust_err},
          {"std_err", res.std_err},
          {"n", res.n},
          {"attack",
           {{"norm", eval_norm},
            {"eps", pm.eps},
            {"steps", attack.steps},
            {"alpha", attack.step_size},
            {"restarts", attack.restarts},
            {"random_init", attack.random_init}}}};
      std::cout << out.dump(2) << "\n";
    });
  }

  if (sweep_cmd->parsed()) {
    RunConfigDocument base;
    std::vector<double> values;
    try {
      base = load_config_file(sweep_config_path);
      std::string token;
      std::istringstream vs(sweep_values);
      while (std::getline(vs, token, ',')) {
        if (!token.empty()) values.push_back(std::stod(token));
      }
      if (values.empty()) throw ConfigError("sweep: no values given");
      if (sweep_axis == "width") {
        for (double v : values)
          if (v < 1.0 || v != std::floor(v))
            throw ConfigError("sweep: width values must be positive integers");
      }
    } catch (const ConfigError& e) {
      std::cerr << e.what() << "\n";
      return kExitConfig;
    } catch (const std::exception& e) {
      std::cerr << "sweep: " << e.what() << "\n";
      return kExitConfig;
    }

    return guarded([&] {
      std::sort(values.begin(), values.end());
      fs::create_directories(sweep_out);

      struct Row {
        double value;
        GapReport gap;
        std::string error;
      };
      std::vector<Row> rows(values.size());
      std::atomic<size_t> next{0};
      const int workers = std::min<int>(sweep_workers(), static_cast<int>(values.size()));

      auto worker = [&] {
        for (;;) {
          const size_t i = next.fetch_add(1);
          if (i >= values.size()) return;
          const double v = values[i];
          RunConfigDocument cfg = base;
          if (sweep_axis == "width") {
            cfg.train.model.width_factor = static_cast<int>(v);
          } else if (sweep_axis == "l1" || sweep_axis == "l2") {
            cfg.train.regularizer = RegularizerSpec{};
            cfg.train.regularizer.kind = sweep_axis == "l1" ? RegKind::l1 : RegKind::l2;
            cfg.train.regularizer.lambda = static_cast<float>(v);
            // the explicit penalty replaces baseline weight decay on this axis
            cfg.train.weight_decay = 0.0f;
          } else if (sweep_axis == "cutout") {
            cfg.train.regularizer = RegularizerSpec{};
            cfg.train.regularizer.kind = RegKind::cutout;
            cfg.train.regularizer.patch_len = static_cast<int>(v);
          } else {
            cfg.train.regularizer = RegularizerSpec{};
            cfg.train.regularizer.kind = RegKind::mixup;
            cfg.train.regularizer.mixup_alpha = static_cast<float>(v);
          }
          rows[i].value = v;
          try {
            rows[i].gap = run_training(cfg, sweep_out + "/" + sweep_axis + "_" + value_token(v));
          } catch (const std::exception& e) {
            rows[i].error = e.what();
          }
        }
      };
      std::vector<std::thread> pool;
      for (int t = 1; t < workers; ++t) pool.emplace_back(worker);
      worker();
      for (auto& t : pool) t.join();

      for (const auto& r : rows)
        if (!r.error.empty()) throw std::runtime_error("sweep value " + value_token(r.value) + ": " + r.error);

      std::ostringstream table;
      table << "value,best,final,diff\n";
      char buf[120];
      for (const auto& r : rows) {
        std::snprintf(buf, sizeof buf, "%s,%.6g,%.6g,%.6g\n", value_token(r.value).c_str(),
                      r.gap.best_err, r.gap.final_mean, r.gap.diff);
        table << buf;
      }
      write_text(sweep_out + "/sweep_table.csv", table.str());
      std::cout << table.str();
    });
  }

  if (report_cmd->parsed()) {
    std::vector<NamedLog> logs;
    for (const auto& dir : report_runs) {
      const std::string path = fs::path(dir) / "runlog.csv";
      if (!fs::exists(path)) continue;
      try {
        logs.push_back({fs::path(dir).filename().string(), read_runlog_csv(path)});
      } catch (const std::exception& e) {
        std::cerr << "report: " << e.what() << "\n";
        return kExitRuntime;
      }
    }
    if (logs.empty()) {
      std::cerr << "report: no runlog.csv found under the given directories\n";
      return kExitConfig;
    }
    return guarded([&] {
      write_text(report_plot, render_curves_svg(logs));
      std::cout << gap_table_text(logs);
    });
  }

  if (gen_cmd->parsed()) {
    return guarded([&] {
      fs::create_directories(gen_out);
      const Dataset train = gen_pattern_images(gen_n, gen_classes, gen_side,
                                               static_cast<float>(gen_noise),
                                               static_cast<uint64_t>(gen_seed));
      write_idx(train, gen_out + "/train-images.idx", gen_out + "/train-labels.idx");
      const Dataset test = gen_pattern_images(gen_test_n, gen_classes, gen_side,
                                              static_cast<float>(gen_noise),
                                              static_cast<uint64_t>(gen_seed) + 1);
      write_idx(test, gen_out + "/test-images.idx", gen_out + "/test-labels.idx");
      if (gen_unlabeled_n > 0) {
        const Dataset extra = gen_pattern_images(gen_unlabeled_n, gen_classes, gen_side,
                                                 static_cast<float>(gen_noise),
                                                 static_cast<uint64_t>(gen_seed) + 2);
        write_idx(extra, gen_out + "/unlabeled-images.idx", gen_out + "/unlabeled-labels.idx");
      }
      std::cerr << "gen-data: wrote " << gen_n << " train / " << gen_test_n << " test examples to "
                << gen_out << "\n";
    });
  }

  return kExitConfig;
}

int run(int argc, char** argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run(args);
}

}  // namespace robustlab::cli
