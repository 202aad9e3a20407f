#include "cli.hpp"

#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "CLI11.hpp"
#include "json.hpp"
#include "json_config.hpp"
#include "manifest.hpp"
#include "swarmtsc/compare.hpp"
#include "swarmtsc/dataset.hpp"
#include "swarmtsc/metrics.hpp"
#include "swarmtsc/nn/model.hpp"
#include "swarmtsc/nn/train.hpp"
#include "swarmtsc/pca.hpp"
#include "swarmtsc/sweep.hpp"
#include "swarmtsc/trajectory_io.hpp"

namespace swarmtsc::cli {

namespace {

using nlohmann::json;

/// Bad option values detected after parsing.
class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

/// "full" or a positive step count; 0 stands for full.
std::size_t parse_window(const std::string& s) {
  if (s == "full") return 0;
  try {
    std::size_t pos = 0;
    const long long v = std::stoll(s, &pos);
    if (pos == s.size() && v > 0) return static_cast<std::size_t>(v);
  } catch (const std::exception&) {
  }
  throw UsageError("--window must be 'full' or a positive step count, got '" + s + "'");
}

SweepModel parse_sweep_model(const std::string& s) {
  const auto dash = s.find('-');
  if (dash == std::string::npos) throw UsageError("model '" + s + "' must look like cnn-mh");
  try {
    return {nn::parse_architecture(s.substr(0, dash)), parse_output_kind(s.substr(dash + 1))};
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
}

template <typename F>
auto as_usage(F&& f) {
  try {
    return f();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
}

struct TrainArgs {
  std::string optimizer = "sgd";
  double learning_rate = 1e-2;
  std::size_t batch = 64;
  std::size_t epochs = 100;
  std::size_t patience = 10;
  double momentum = 0.0;
  double attribute_weight = 0.8;

  void add(CLI::App* sub) {
    sub->add_option("--optimizer", optimizer, "sgd or adam")->check(CLI::IsMember({"sgd", "adam"}));
    sub->add_option("--lr", learning_rate, "Learning rate");
    sub->add_option("--batch", batch, "Mini-batch size");
    sub->add_option("--epochs", epochs, "Maximum epochs");
    sub->add_option("--patience", patience, "Early-stopping patience in epochs");
    sub->add_option("--momentum", momentum, "SGD momentum, 0 for plain SGD");
    sub->add_option("--attribute-weight", attribute_weight, "Multihead attribute loss weight");
  }

  [[nodiscard]] nn::TrainConfig config(std::uint64_t seed) const {
    nn::TrainConfig c;
    c.optimizer = nn::parse_optimizer(optimizer);
    c.learning_rate = learning_rate;
    c.batch_size = batch;
    c.max_epochs = epochs;
    c.patience = patience;
    c.momentum = momentum;
    c.weights = {attribute_weight, 1.0 - attribute_weight};
    c.seed = seed;
    as_usage([&] {
      c.validate();
      return 0;
    });
    return c;
  }
};

json metrics_json(const Evaluation& e) {
  json heads = json::object();
  for (const auto& h : e.heads) {
    json conf = json::array();
    for (int t = 0; t < h.confusion.n; ++t) {
      json row = json::array();
      for (int p = 0; p < h.confusion.n; ++p) row.push_back(h.confusion.at(t, p));
      conf.push_back(row);
    }
    heads[h.head] = {{"accuracy", h.metrics.accuracy},
                     {"random_accuracy", h.metrics.random_accuracy},
                     {"acc_adj", h.metrics.adjusted},
                     {"ner", h.metrics.normalized_error},
                     {"loss", h.loss},
                     {"derived", h.derived},
                     {"confusion", conf}};
  }
  return {{"heads", heads}, {"loss_combined", e.loss.combined}, {"count", e.tactic().metrics.count}};
}

void print_evaluation(std::ostream& out, const std::string& title, const Evaluation& e) {
  out << title << '\n';
  for (const auto& h : e.heads) {
    out << "  " << h.head << (h.derived ? " (derived)" : "") << ": accuracy " << fmt("%.4f", h.metrics.accuracy)
        << "  acc_adj " << fmt("%.4f", h.metrics.adjusted) << "  ner " << fmt("%.4f", h.metrics.normalized_error)
        << "  loss " << fmt("%.4f", h.loss) << '\n';
  }
  const auto& c = e.tactic().confusion;
  out << "  tactic confusion (rows true, cols predicted):\n";
  for (int t = 0; t < c.n; ++t) {
    out << "    " << TacticLabel(t).name() << ":";
    for (int p = 0; p < c.n; ++p) out << ' ' << c.at(t, p);
    out << '\n';
  }
}

std::vector<Trajectory> load_batches(const std::vector<std::string>& paths, std::ostream& log, bool quiet) {
  std::vector<Trajectory> all;
  for (const auto& p : paths) {
    auto b = load_trajectories(p);
    if (!quiet) log << "read " << b.trajectories.size() << " trajectories from " << p << '\n';
    std::move(b.trajectories.begin(), b.trajectories.end(), std::back_inserter(all));
  }
  if (all.empty()) throw DataError("no trajectories in the input files");
  return all;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Swarm engagement simulation and tactic classification"};
  app.option_defaults()->always_capture_default();
  app.config_formatter(std::make_shared<JsonConfig>());
  app.set_config("--config", "", "JSON run description (CLI flags take precedence)");
  app.require_subcommand(1);
  app.fallthrough();
  std::string manifest_path;
  bool quiet = false;
  app.add_option("--manifest", manifest_path, "Manifest path (default: next to the main output)");
  app.add_flag("-q,--quiet", quiet, "Only print errors");

  Manifest manifest;
  manifest.argv = args;
  std::function<void()> action;
  std::string primary;  // file the default manifest path is derived from

  // simulate ---------------------------------------------------------------
  struct {
    std::string tactic = "all", out;
    std::size_t na = 10, nd = 10, instances = 1, max_steps = 1000;
    std::uint64_t seed = 0;
    double dt = 1.0;
    unsigned threads = 0;
  } sim;
  auto* simulate = app.add_subcommand("simulate", "Simulate engagements and write a trajectory container");
  simulate->add_option("--tactic", sim.tactic, "greedy, greedy+, auction, auction+ or all")
      ->check(CLI::IsMember({"greedy", "greedy+", "auction", "auction+", "all"}));
  simulate->add_option("--na", sim.na, "Attackers");
  simulate->add_option("--nd", sim.nd, "Defenders");
  simulate->add_option("--instances", sim.instances, "Engagements (per tactic with --tactic all)");
  simulate->add_option("--seed", sim.seed, "Master seed");
  simulate->add_option("--max-steps", sim.max_steps, "Step cap per engagement");
  simulate->add_option("--dt", sim.dt, "Time step");
  simulate->add_option("--threads", sim.threads, "Worker threads, 0 = hardware concurrency");
  simulate->add_option("--out", sim.out, "Output container")->required();
  simulate->callback([&] {
    primary = sim.out;
    action = [&] {
      EngagementConfig base;
      base.n_attackers = sim.na;
      base.n_defenders = sim.nd;
      base.max_steps = sim.max_steps;
      base.dt = sim.dt;
      as_usage([&] {
        base.validate();
        return 0;
      });
      std::vector<Trajectory> batch;
      if (sim.tactic == "all") {
        batch = simulate_all_tactics(base, sim.instances, sim.seed, sim.threads);
      } else {
        base.tactic = *TacticLabel::parse(sim.tactic);
        batch = simulate_batch(base, sim.instances, sim.seed, sim.threads);
      }
      json echo = to_json(base);
      echo["tactic"] = sim.tactic;
      echo["master_seed"] = sim.seed;
      echo["instances"] = sim.instances;
      manifest.outputs.push_back(sim.out);
      save_trajectories(sim.out, batch, echo);
      if (!quiet) {
        const auto s = truncation_stats(batch);
        std::size_t truncated = 0, fallbacks = 0;
        for (const auto& t : batch) {
          truncated += t.truncated ? 1 : 0;
          fallbacks += t.pronav_fallbacks;
        }
        out << "wrote " << batch.size() << " trajectories to " << sim.out << "; steps min " << s.min_length
            << " mean " << fmt("%.1f", s.mean_length) << " max " << s.max_length << "; truncated " << truncated
            << "; pronav fallbacks " << fallbacks << '\n';
      }
    };
  });

  // build-dataset ----------------------------------------------------------
  struct {
    std::vector<std::string> in;
    std::string window = "full", out;
    double noise_factor = 0.0;
    std::uint64_t seed = 0;
  } ds;
  auto* build = app.add_subcommand("build-dataset", "Truncate, split, window, add noise and fit normalization");
  build->add_option("--in", ds.in, "Trajectory containers")->required();
  build->add_option("--window", ds.window, "Observation window: full or a step count");
  build->add_option("--noise-factor", ds.noise_factor, "Noise percent of the characteristic lengths");
  build->add_option("--seed", ds.seed, "Split and noise seed");
  build->add_option("--out", ds.out, "Output dataset container")->required();
  build->callback([&] {
    primary = ds.out;
    action = [&] {
      BuildOptions opt;
      opt.window = parse_window(ds.window);
      opt.noise_factor = ds.noise_factor;
      opt.seed = ds.seed;
      if (!(opt.noise_factor >= 0.0 && opt.noise_factor <= 100.0))
        throw UsageError("--noise-factor must be in [0, 100]");
      manifest.inputs.insert(manifest.inputs.end(), ds.in.begin(), ds.in.end());
      const auto batch = load_batches(ds.in, out, quiet);
      const Dataset d = as_usage([&] { return build_dataset(batch, opt); });
      manifest.outputs.push_back(ds.out);
      save_dataset(ds.out, d);
      if (!quiet) {
        out << "dataset " << d.features.instances << " x " << d.features.time << " x " << d.features.features
            << "; splits " << d.splits.train.size() << "/" << d.splits.val.size() << "/" << d.splits.test.size()
            << "; trajectory length min " << d.truncation.min_length << " mean "
            << fmt("%.1f", d.truncation.mean_length) << " max " << d.truncation.max_length << '\n';
        if (!d.stats.degenerate.empty())
          out << "warning: " << d.stats.degenerate.size() << " constant feature columns, std floored\n";
      }
    };
  });

  // train ------------------------------------------------------------------
  struct {
    std::string model = "cnn", output = "mh", window = "full", data, out;
    std::uint64_t seed = 0;
    bool no_concat = false;
    TrainArgs train;
  } tr;
  auto* train = app.add_subcommand("train", "Train a classifier and write a checkpoint");
  train->add_option("--model", tr.model, "Architecture")->check(CLI::IsMember({"logreg", "fc", "cnn", "fcn"}));
  train->add_option("--output", tr.output, "Heads: mc, ml or mh")->check(CLI::IsMember({"mc", "ml", "mh"}));
  train->add_option("--window", tr.window, "full, or a prefix length no longer than the dataset's");
  train->add_option("--data", tr.data, "Dataset container")->required();
  train->add_option("--seed", tr.seed, "Initialization and batch-order seed");
  train->add_flag("--no-concat", tr.no_concat, "Multihead: do not feed attribute probabilities to the tactic head");
  train->add_option("--out", tr.out, "Checkpoint path")->required();
  tr.train.add(train);
  train->callback([&] {
    primary = tr.out;
    action = [&] {
      manifest.inputs.push_back(tr.data);
      const auto cfg = tr.train.config(tr.seed);
      const Dataset d = as_usage([&] { return rewindow(load_dataset(tr.data), parse_window(tr.window)); });
      const SweepModel sm{nn::parse_architecture(tr.model), parse_output_kind(tr.output)};
      const auto train_set = nn::make_split<float>(d, d.splits.train);
      const auto val_set = nn::make_split<float>(d, d.splits.val);
      const auto test_set = nn::make_split<float>(d, d.splits.test);
      const nn::ModelSpec spec{sm.arch, sm.output, !tr.no_concat, static_cast<nn::Index>(d.features.time),
                               static_cast<nn::Index>(d.features.features)};
      auto m = as_usage([&] { return nn::build_model<float>(spec, child_seed(cfg.seed, 1)); });
      if (!quiet) out << "training " << sm.name() << " (" << m.parameter_count() << " parameters) on "
                      << train_set.size() << " instances x " << d.features.time << " steps\n";
      json history = json::array();
      const auto result = nn::train(m, train_set, val_set, cfg, [&](std::size_t epoch, const nn::EpochRecord& r) {
        history.push_back({{"epoch", epoch}, {"train_loss", r.train_loss}, {"val_loss", r.val.combined},
                           {"val_categorical", r.val.categorical}, {"val_binary", r.val.binary}});
        if (!quiet)
          out << "epoch " << epoch << " train " << fmt("%.4f", r.train_loss) << " val "
              << fmt("%.4f", r.val.combined) << '\n';
      });
      const auto val_eval = evaluate(m, val_set, cfg.weights);
      const auto test_eval = evaluate(m, test_set, cfg.weights);
      const json extra = {
          {"seed", tr.seed},
          {"dataset", {{"window", d.window}, {"noise_factor", d.noise_factor}, {"seed", d.seed}}},
          {"train", {{"optimizer", tr.train.optimizer}, {"lr", cfg.learning_rate}, {"batch", cfg.batch_size},
                     {"max_epochs", cfg.max_epochs}, {"patience", cfg.patience}, {"momentum", cfg.momentum},
                     {"attribute_weight", cfg.weights.attribute}}},
          {"best_epoch", result.best_epoch},
          {"history", history},
          {"validation", metrics_json(val_eval)},
          {"test", metrics_json(test_eval)},
      };
      manifest.outputs.push_back(tr.out);
      nn::save_checkpoint(tr.out, m, extra);
      if (!quiet) {
        out << "best epoch " << result.best_epoch << " of " << result.epochs_trained() << "; val loss "
            << fmt("%.4f", result.best_val.combined) << '\n';
        print_evaluation(out, "test split", test_eval);
      }
    };
  });

  // evaluate ---------------------------------------------------------------
  struct {
    std::string ckpt, data, split = "test", out;
  } ev;
  auto* evaluate_cmd = app.add_subcommand("evaluate", "Score a checkpoint on a dataset split");
  evaluate_cmd->add_option("--model-ckpt", ev.ckpt, "Checkpoint")->required();
  evaluate_cmd->add_option("--data", ev.data, "Dataset container")->required();
  evaluate_cmd->add_option("--split", ev.split, "train, val or test")->check(CLI::IsMember({"train", "val", "test"}));
  evaluate_cmd->add_option("--out", ev.out, "Optional JSON report");
  evaluate_cmd->callback([&] {
    primary = ev.out.empty() ? ev.ckpt + ".evaluate" : ev.out;
    action = [&] {
      manifest.inputs.insert(manifest.inputs.end(), {ev.ckpt, ev.data});
      auto [m, info] = nn::load_checkpoint<float>(ev.ckpt);
      Dataset d = load_dataset(ev.data);
      const auto t = static_cast<std::size_t>(info.spec.time_steps);
      if (d.features.features != static_cast<std::size_t>(info.spec.features))
        throw DataError("checkpoint expects " + std::to_string(info.spec.features) + " features, dataset has " +
                        std::to_string(d.features.features));
      if (d.features.time < t)
        throw DataError("checkpoint expects " + std::to_string(t) + " steps, dataset has " +
                        std::to_string(d.features.time));
      d = rewindow(d, t);
      const auto& rows = ev.split == "train" ? d.splits.train : ev.split == "val" ? d.splits.val : d.splits.test;
      const auto split = nn::make_split<float>(d, rows);
      nn::LossWeights w;
      if (info.extra.contains("train")) {
        w.attribute = info.extra["train"].value("attribute_weight", 0.8);
        w.tactic = 1.0 - w.attribute;
      }
      const auto e = evaluate(m, split, w);
      if (!quiet) print_evaluation(out, ev.split + " split, " + std::to_string(split.size()) + " instances", e);
      if (!ev.out.empty()) {
        manifest.outputs.push_back(ev.out);
        std::ofstream f(ev.out);
        if (!f) throw DataError("cannot write '" + ev.out + "'");
        f << json{{"split", ev.split}, {"metrics", metrics_json(e)}}.dump(2) << '\n';
      }
    };
  });

  // sweep ------------------------------------------------------------------
  struct {
    std::string kind, out, protocol = "matched", window = "full";
    std::vector<std::string> in;
    std::vector<std::string> models{"cnn-mh", "fcn-mh"};
    std::vector<std::string> windows{"20", "full"};
    std::vector<double> factors{0, 10, 20, 30, 40, 50};
    std::vector<std::size_t> sizes{10, 25, 50};
    std::size_t instances = 1200, na = 10;
    std::uint64_t seed = 0, sim_seed = 0;
    bool large = false, timing = false;
    TrainArgs train;
  } sw;
  auto* sweep = app.add_subcommand("sweep", "Train and score models across windows, noise factors or swarm sizes");
  sweep->add_option("--kind", sw.kind, "window, noise or size")->required()->check(
      CLI::IsMember({"window", "noise", "size"}));
  sweep->add_option("--out", sw.out, "CSV output")->required();
  sweep->add_option("--in", sw.in, "Trajectory containers (window/noise); simulated when omitted");
  sweep->add_option("--instances", sw.instances, "Simulated engagements per tactic");
  sweep->add_option("--na", sw.na, "Swarm size when simulating for window/noise sweeps");
  sweep->add_option("--sim-seed", sw.sim_seed, "Master seed for simulation");
  sweep->add_option("--seed", sw.seed, "Dataset and training seed");
  sweep->add_option("--models", sw.models, "Models as arch-output, e.g. cnn-mh fcn-mh");
  sweep->add_option("--windows", sw.windows, "Window sweep values (full allowed)");
  sweep->add_option("--window", sw.window, "Window for noise and size sweeps");
  sweep->add_option("--factors", sw.factors, "Noise factors in percent");
  sweep->add_option("--protocol", sw.protocol, "Noise protocol: matched or test-only")->check(
      CLI::IsMember({"matched", "test-only"}));
  sweep->add_option("--sizes", sw.sizes, "Swarm sizes (N v N)");
  sweep->add_flag("--large", sw.large, "Append 75 and 100 to the size sweep");
  sweep->add_flag("--timing", sw.timing, "Write wall-clock seconds (output no longer byte-reproducible)");
  sw.train.add(sweep);
  sweep->callback([&] {
    primary = sw.out;
    action = [&] {
      manifest.inputs.insert(manifest.inputs.end(), sw.in.begin(), sw.in.end());
      std::vector<SweepModel> models;
      for (const auto& m : sw.models) models.push_back(parse_sweep_model(m));
      SweepOptions opt;
      opt.train = sw.train.config(sw.seed);
      opt.seed = sw.seed;
      opt.window = parse_window(sw.window);
      opt.noise = parse_noise_protocol(sw.protocol);
      if (!quiet) opt.log = [&](const std::string& s) { out << s << '\n' << std::flush; };
      const auto batch = [&] {
        if (!sw.in.empty()) return load_batches(sw.in, out, quiet);
        EngagementConfig base;
        base.n_attackers = base.n_defenders = sw.na;
        return simulate_all_tactics(base, sw.instances, sw.sim_seed);
      };
      SweepResult r;
      if (sw.kind == "window") {
        std::vector<std::size_t> windows;
        for (const auto& w : sw.windows) windows.push_back(parse_window(w));
        r = as_usage([&] { return sweep_window(batch(), models, windows, opt); });
      } else if (sw.kind == "noise") {
        r = as_usage([&] { return sweep_noise(batch(), models, sw.factors, opt); });
      } else {
        auto sizes = sw.sizes;
        if (sw.large) sizes.insert(sizes.end(), {75, 100});
        r = as_usage([&] { return sweep_swarmsize(models, sizes, sw.instances, sw.sim_seed, opt); });
      }
      manifest.outputs.push_back(sw.out);
      std::ofstream f(sw.out);
      if (!f) throw DataError("cannot write '" + sw.out + "'");
      write_csv(f, r, sw.timing);
    };
  });

  // compare-tactics --------------------------------------------------------
  struct {
    std::string out;
    std::size_t na = 10, nd = 10;
    std::uint64_t seed = 0;
  } cmp;
  auto* compare = app.add_subcommand("compare-tactics", "Run all four tactics from one initialization, write CSV");
  compare->add_option("--seed", cmp.seed, "Shared engagement seed");
  compare->add_option("--na", cmp.na, "Attackers");
  compare->add_option("--nd", cmp.nd, "Defenders");
  compare->add_option("--out", cmp.out, "CSV output")->required();
  compare->callback([&] {
    primary = cmp.out;
    action = [&] {
      EngagementConfig base;
      base.n_attackers = cmp.na;
      base.n_defenders = cmp.nd;
      base.seed = cmp.seed;
      as_usage([&] {
        base.validate();
        return 0;
      });
      const auto runs = compare_tactics(base);
      manifest.outputs.push_back(cmp.out);
      std::ofstream f(cmp.out);
      if (!f) throw DataError("cannot write '" + cmp.out + "'");
      write_comparison_csv(f, runs);
      if (!quiet) {
        for (const auto& r : runs) {
          out << r.tactic.name() << ": " << r.steps - 1 << " steps, step-0 duplicated targets "
              << duplicated_targets(r.targets.front()) << '\n';
        }
      }
    };
  });

  // pca --------------------------------------------------------------------
  struct {
    std::string data, out, split = "train";
    long k = 2;
    std::size_t stride = 1;
  } pc;
  auto* pca = app.add_subcommand("pca", "Project normalized features onto principal components");
  pca->add_option("--data", pc.data, "Dataset container")->required();
  pca->add_option("--k", pc.k, "Components")->check(CLI::Range(1, 3));
  pca->add_option("--split", pc.split, "train, val or test")->check(CLI::IsMember({"train", "val", "test"}));
  pca->add_option("--stride", pc.stride, "Keep every stride-th time step")->check(CLI::PositiveNumber);
  pca->add_option("--out", pc.out, "CSV of projected points")->required();
  pca->callback([&] {
    primary = pc.out;
    action = [&] {
      manifest.inputs.push_back(pc.data);
      const Dataset d = load_dataset(pc.data);
      const auto& rows = pc.split == "train" ? d.splits.train : pc.split == "val" ? d.splits.val : d.splits.test;
      FeatureTensor x = gather(d.features, rows);
      normalize(x, d.stats);
      std::vector<std::size_t> keep;
      for (std::size_t t = 0; t < x.time; t += pc.stride) keep.push_back(t);
      FeatureTensor sub(x.instances, keep.size(), x.features);
      for (std::size_t n = 0; n < x.instances; ++n)
        for (std::size_t i = 0; i < keep.size(); ++i)
          for (std::size_t f = 0; f < x.features; ++f) sub.at(n, i, f) = x.at(n, keep[i], f);
      const auto r = as_usage([&] { return pca_project(flatten_samples(sub), pc.k); });
      manifest.outputs.push_back(pc.out);
      std::ofstream f(pc.out);
      if (!f) throw DataError("cannot write '" + pc.out + "'");
      f << "instance,t,tactic";
      for (long c = 0; c < pc.k; ++c) f << ",pc" << c + 1;
      f << '\n';
      char buf[64];
      for (std::size_t n = 0; n < sub.instances; ++n) {
        for (std::size_t i = 0; i < keep.size(); ++i) {
          f << rows[n] << ',' << keep[i] << ',' << TacticLabel(d.tactics[rows[n]]).name();
          for (long c = 0; c < pc.k; ++c) {
            std::snprintf(buf, sizeof buf, ",%.6f", r.projected(static_cast<Eigen::Index>(n * keep.size() + i), c));
            f << buf;
          }
          f << '\n';
        }
      }
      if (!quiet) {
        out << "explained variance:";
        for (long c = 0; c < pc.k; ++c) out << ' ' << fmt("%.4f", r.explained_ratio(c));
        out << '\n';
      }
    };
  });

  // ------------------------------------------------------------------------
  const auto finish = [&](int code, const std::string& error) {
    manifest.exit_code = code;
    manifest.error = error;
    std::string path = manifest_path;
    if (path.empty() && !primary.empty()) path = primary + ".manifest.json";
    if (!path.empty()) {
      try {
        manifest.write(path);
      } catch (const std::exception& e) {
        err << "warning: " << e.what() << '\n';
      }
    }
    if (!error.empty()) err << "error: " << error << '\n';
    return code;
  };

  try {
    std::vector<const char*> argv{"swarmtsc"};
    for (const auto& a : args) argv.push_back(a.c_str());
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    // Best effort: a manifest needs a path, which may not have been parsed.
    for (std::size_t i = 0; i + 1 < args.size(); ++i) {
      if (args[i] == "--out" && primary.empty()) primary = args[i + 1];
    }
    return finish(kUsage, e.what());
  }

  for (const auto* sub : app.get_subcommands()) {
    manifest.command = sub->get_name();
    try {
      manifest.config[sub->get_name()] = json::parse(JsonConfig().to_config(sub, true, false, ""));
    } catch (const json::exception&) {
    }
  }
  if (app.get_config_ptr()->count() > 0) manifest.inputs.push_back(app.get_config_ptr()->as<std::string>());

  try {
    action();
  } catch (const UsageError& e) {
    return finish(kUsage, e.what());
  } catch (const nn::TrainingDiverged& e) {
    return finish(kDiverged, e.what());
  } catch (const DataError& e) {
    return finish(kDataError, e.what());
  } catch (const std::invalid_argument& e) {
    return finish(kUsage, e.what());
  } catch (const std::exception& e) {
    return finish(kDataError, e.what());
  }
  return finish(kOk, "");
}

}  // namespace swarmtsc::cli
