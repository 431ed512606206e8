// feats: command-line front end for data generation, training, evaluation,
// attribution exports and end-to-end experiments.

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <memory>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "feats/datagen.hpp"
#include "feats/errors.hpp"
#include "feats/experiment.hpp"
#include "feats/interpret.hpp"
#include "feats/io.hpp"
#include "feats/metrics.hpp"
#include "feats/panel_io.hpp"
#include "feats/serialize.hpp"
#include "feats/train.hpp"

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

enum Exit { kOk = 0, kUsage = 1, kData = 2, kTraining = 3 };

// Panel source shared by train / evaluate / explain.
struct DataArgs {
  std::string dir;
  std::string split = "train";
  std::string uea;
  std::string task = "regression";
  std::size_t num_classes = 0;

  void add(CLI::App* cmd, const char* default_split) {
    split = default_split;
    cmd->add_option("--data", dir, "Directory with <split>_X.csv, <split>_y.csv and optional <split>_Z.csv");
    cmd->add_option("--split", split, "File prefix inside --data")->capture_default_str();
    cmd->add_option("--uea", uea, "UEA/UCR .ts file instead of --data");
    cmd->add_option("--task", task, "Target kind of CSV data: regression, binary or multiclass")->capture_default_str();
    cmd->add_option("--num-classes", num_classes, "Class count of multiclass CSV data (0 infers)");
  }

  feats::PanelDataset load(std::optional<feats::TargetKind> kind = std::nullopt) const {
    if (!uea.empty() == !dir.empty()) throw feats::ConfigError("give exactly one of --data or --uea");
    if (!uea.empty()) return feats::bench::load_uea_ts(uea);
    return feats::bench::load_panel_csv(feats::bench::PanelFiles::in_directory(dir, split),
                                        kind ? *kind : feats::target_kind_from_string(task), num_classes);
  }
};

feats::TargetKind kind_of(feats::Task t) {
  switch (t) {
    case feats::Task::Regression: return feats::TargetKind::Continuous;
    case feats::Task::Binary: return feats::TargetKind::Binary;
    case feats::Task::Multiclass: return feats::TargetKind::Multiclass;
  }
  return feats::TargetKind::Continuous;
}

// Appends `--key value` pairs from a JSON object so config values take
// precedence over earlier flags (options keep their last value).
std::vector<std::string> expand_config(std::vector<std::string> args) {
  for (std::size_t i = 0; i + 1 < args.size(); ++i) {
    if (args[i] != "--config") continue;
    std::string first;
    for (std::size_t j = 0; j < args.size(); ++j)
      if (args[j].rfind("-", 0) != 0) {
        first = args[j];
        break;
      }
    if (first == "bench") return args;  // bench reads --config as an experiment file
    const json doc = json::parse(feats::io::read_text(args[i + 1]));
    if (!doc.is_object()) throw feats::ConfigError("--config file must hold a JSON object");
    args.erase(args.begin() + static_cast<std::ptrdiff_t>(i), args.begin() + static_cast<std::ptrdiff_t>(i) + 2);
    for (const auto& [key, value] : doc.items()) {
      const std::string flag = "--" + key;
      if (value.is_boolean()) {
        if (value.get<bool>()) args.push_back(flag);
      } else if (value.is_array()) {
        args.push_back(flag);
        for (const auto& v : value) args.push_back(v.is_string() ? v.get<std::string>() : v.dump());
      } else {
        args.push_back(flag);
        args.push_back(value.is_string() ? value.get<std::string>() : value.dump());
      }
    }
    break;
  }
  return args;
}

void write_or_print(const std::string& path, const std::string& text) {
  if (path.empty())
    std::cout << text;
  else
    feats::io::write_text_atomic(path, text);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"FEATS: multi-head attention feature engineering for multivariate time series"};
  app.require_subcommand(1);
  app.fallthrough();
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  std::string config_path;
  app.add_option("--config", config_path, "JSON file whose keys override flags (bench: experiment config)");

  // generate
  auto* gen = app.add_subcommand("generate", "Write a simulated dataset as panel CSV files");
  std::string g_experiment, g_out;
  std::size_t g_train = 0, g_test = 0;
  std::uint64_t g_seed = 0;
  double g_mult = 5.0, g_noise = -1.0, g_omega = 1.0, g_alpha = 0.5;
  gen->add_option("--experiment", g_experiment, "toy25, sim31, sim32 or sim332")->required();
  gen->add_option("--n-train", g_train, "Training samples")->required();
  gen->add_option("--n-test", g_test, "Test samples")->required();
  gen->add_option("--seed", g_seed, "Generator seed")->required();
  gen->add_option("--out", g_out, "Output directory")->required();
  gen->add_option("--multiplier", g_mult, "Log-odds multiplier C (sim32)")->capture_default_str();
  gen->add_option("--noise-scale", g_noise, "Noise standard deviation (negative: experiment default)");
  gen->add_option("--omega", g_omega, "ARCH(1) omega")->capture_default_str();
  gen->add_option("--alpha", g_alpha, "ARCH(1) alpha")->capture_default_str();

  // train
  auto* tr = app.add_subcommand("train", "Fit a model and write the model file");
  DataArgs t_data;
  t_data.add(tr, "train");
  std::uint64_t t_seed = 0;
  std::string t_out, t_type = "feats", t_downstream = "auto";
  std::optional<std::size_t> t_heads, t_tau;
  std::vector<std::size_t> t_hidden{40, 40};
  double t_l1 = 0.0, t_l2 = 0.0;
  feats::TrainConfig t_cfg;
  tr->add_option("--seed", t_seed, "Seed for initialisation, shuffling and the validation split")->required();
  tr->add_option("--out", t_out, "Model file to write")->required();
  tr->add_option("--model", t_type, "feats or ffnn")->capture_default_str();
  tr->add_option("--heads", t_heads, "Number of heads (default: number of series)");
  tr->add_option("--tau", t_tau, "Window half-width of every head");
  tr->add_option("--downstream", t_downstream, "auto, linear, logistic, softmax or feature_attention")->capture_default_str();
  tr->add_option("--hidden", t_hidden, "FFNN hidden widths")->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);
  tr->add_option("--l1", t_l1, "L1 penalty on scaling coefficients");
  tr->add_option("--l2", t_l2, "L2 penalty on scaling coefficients");
  tr->add_option("--lr", t_cfg.learning_rate, "Learning rate")->capture_default_str();
  tr->add_option("--batch-size", t_cfg.batch_size, "Mini-batch size")->capture_default_str();
  tr->add_option("--max-epochs", t_cfg.max_epochs, "Epoch limit")->capture_default_str();
  tr->add_option("--patience", t_cfg.patience, "Early-stopping patience")->capture_default_str();
  tr->add_option("--lr-patience", t_cfg.lr_patience, "Epochs without improvement before halving the learning rate");
  tr->add_option("--validation-fraction", t_cfg.validation_fraction, "Share held out for early stopping")->capture_default_str();
  bool t_quiet = false;
  tr->add_flag("--quiet", t_quiet, "No per-epoch progress");

  // evaluate
  auto* ev = app.add_subcommand("evaluate", "Score a model file on a dataset");
  DataArgs e_data;
  e_data.add(ev, "test");
  std::string e_model, e_out;
  ev->add_option("--model", e_model, "Model file")->required();
  ev->add_option("--out", e_out, "metrics.json path (stdout when omitted)");

  // explain
  auto* ex = app.add_subcommand("explain", "Export attention weights and variance tables");
  DataArgs x_data;
  x_data.add(ex, "test");
  std::string x_model, x_out;
  std::size_t x_samples = 100;
  ex->add_option("--model", x_model, "FEATS model file")->required();
  ex->add_option("--out", x_out, "Output directory")->required();
  ex->add_option("--samples", x_samples, "Samples exported to weights.csv")->capture_default_str();

  // bench
  auto* be = app.add_subcommand("bench", "Run an experiment config (or rerun a manifest)");
  std::string b_out;
  std::optional<std::uint64_t> b_seed;
  be->add_option("--out", b_out, "Output directory (overrides the config)");
  be->add_option("--seed", b_seed, "Seed (overrides the config)");

  try {
    std::vector<std::string> args(argv + 1, argv + argc);
    args = expand_config(args);
    std::reverse(args.begin(), args.end());
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kOk : kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  }

  try {
    if (*gen) {
      feats::datagen::GeneratorSpec spec;
      spec.experiment = feats::datagen::experiment_from_string(g_experiment);
      spec.n_train = g_train;
      spec.n_test = g_test;
      spec.seed = g_seed;
      spec.multiplier = g_mult;
      spec.noise_scale = g_noise;
      spec.arch = {g_omega, g_alpha};
      const auto g = feats::datagen::generate(spec);
      for (const auto* split : {&g.train, &g.test}) {
        const std::string prefix = split == &g.train ? "train" : "test";
        if (split->data.n == 0) continue;
        auto files = feats::bench::PanelFiles::in_directory(g_out, prefix);
        if (split->data.covariates) files.z = fs::path(g_out) / (prefix + "_Z.csv");
        feats::bench::write_panel_csv(split->data, files);
        std::string csv = "sample_id";
        for (const auto& name : g.component_names) csv += "," + name;
        csv += split->log_odds.empty() ? ",noise\n" : ",log_odds\n";
        for (std::size_t i = 0; i < split->data.n; ++i) {
          csv += std::to_string(split->data.sample_ids[i]);
          for (std::size_t c = 0; c < g.num_components(); ++c)
            csv += "," + feats::io::format_double(split->components[i * g.num_components() + c]);
          csv += "," + feats::io::format_double(split->log_odds.empty() ? split->noise[i] : split->log_odds[i]) + "\n";
        }
        feats::io::write_text_atomic(fs::path(g_out) / (prefix + "_components.csv"), csv);
      }
      json meta = {{"experiment", g_experiment},
                   {"n_train", g_train},
                   {"n_test", g_test},
                   {"seed", g_seed},
                   {"multiplier", spec.multiplier},
                   {"arch", {{"omega", spec.arch.omega}, {"alpha", spec.arch.alpha}}},
                   {"arma", {{"ar", spec.arma.ar}, {"ma", spec.arma.ma}}},
                   {"burn_in", feats::datagen::kBurnIn},
                   {"noise_scale", spec.effective_noise_scale()},
                   {"noise_variance", g.noise_variance},
                   {"components", g.component_names}};
      feats::io::write_text_atomic(fs::path(g_out) / "meta.json", meta.dump(1) + "\n");
    } else if (*tr) {
      const auto data = t_data.load();
      json model = {{"type", t_type}, {"downstream", t_downstream}, {"hidden", t_hidden},
                    {"penalty", {{"l1", t_l1}, {"l2", t_l2}}}};
      if (t_heads) model["heads"] = *t_heads;
      if (t_tau) model["tau"] = *t_tau;
      t_cfg.seed = t_seed;
      std::unique_ptr<feats::Network> net;
      if (t_type == "feats")
        net = std::make_unique<feats::FeatsModel>(feats::bench::feats_config_from_json(model, data, t_seed));
      else if (t_type == "ffnn")
        net = std::make_unique<feats::FfnnModel>(feats::bench::ffnn_config_from_json(model, data, t_seed));
      else
        throw feats::ConfigError("unknown model type '" + t_type + "'");
      const auto result = feats::train(*net, data, t_cfg, [&](const feats::EpochRecord& e) {
        if (!t_quiet)
          std::fprintf(stderr, "epoch %zu  train %.6g  validation %.6g\n", e.epoch, e.train_loss, e.validation_loss);
      });
      feats::save_model(*net, t_out);
      std::fprintf(stderr, "best epoch %zu, validation loss %.6g, %zu parameters\n", result.best_epoch,
                   result.best_validation_loss, net->parameter_count());
    } else if (*ev) {
      auto net = feats::load_model(e_model);
      const auto data = e_data.load(kind_of(net->task()));
      const auto report = feats::metrics::evaluate(feats::predict(*net, data), data, net->task());
      write_or_print(e_out, feats::bench::report_json(report).dump(1) + "\n");
    } else if (*ex) {
      auto net = feats::load_model(x_model);
      auto* model = dynamic_cast<feats::FeatsModel*>(net.get());
      if (!model) throw feats::ConfigError("explain needs a FEATS model");
      const auto data = x_data.load(kind_of(net->task()));
      const auto report = feats::interpret::extract_weights(*model, data);
      std::vector<std::size_t> first(std::min(x_samples, data.n));
      for (std::size_t i = 0; i < first.size(); ++i) first[i] = i;
      feats::interpret::write_weights_csv(feats::interpret::extract_weights(*model, data.subset(first)),
                                          fs::path(x_out) / "weights.csv");
      std::vector<feats::interpret::VarianceTable> tables;
      std::vector<std::vector<feats::interpret::BoxStats>> boxes;
      for (std::size_t h = 0; h < report.heads(); ++h) {
        tables.push_back(feats::interpret::variance_decomposition(report, h));
        if (report.n >= 5) boxes.push_back(feats::interpret::component_distributions(report, h));
      }
      feats::interpret::write_variance_csv(tables, fs::path(x_out) / "variance.csv");
      if (!boxes.empty()) feats::interpret::write_boxstats_csv(boxes, fs::path(x_out) / "boxstats.csv");
    } else if (*be) {
      if (config_path.empty()) throw feats::ConfigError("bench needs --config");
      json doc = json::parse(feats::io::read_text(config_path));
      if (b_seed) {
        if (doc.contains("manifest_version")) doc["config"]["seed"] = *b_seed;
        else doc["seed"] = *b_seed;
      }
      const auto outcome =
          feats::bench::run_experiment(doc, b_out.empty() ? std::nullopt : std::optional<fs::path>(b_out));
      std::cout << outcome.metrics.dump(1) << '\n';
    }
  } catch (const feats::TrainingError& e) {
    std::cerr << "training failed: " << e.what() << '\n';
    return kTraining;
  } catch (const feats::DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kData;
  } catch (const feats::DimensionError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kData;
  } catch (const feats::StatisticsError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kData;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kUsage;
  } catch (const feats::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kData;
  }
  return kOk;
}
