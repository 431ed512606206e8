#include "feats/experiment.hpp"

#include <openssl/evp.h>

#include <chrono>
#include <cmath>
#include <fstream>
#include <memory>
#include <sstream>

#include "feats/datagen.hpp"
#include "feats/errors.hpp"
#include "feats/interpret.hpp"
#include "feats/io.hpp"
#include "feats/kernels.hpp"
#include "feats/panel_io.hpp"
#include "feats/serialize.hpp"
#include "feats/version.hpp"

namespace feats::bench {

using nlohmann::json;

namespace {

json with_default(const json& obj, const char* key, json fallback) {
  if (obj.is_object() && obj.contains(key)) return obj.at(key);
  return fallback;
}

json resolve_data(const json& data, std::uint64_t seed) {
  json out = data.is_object() ? data : json::object();
  const std::string source = with_default(out, "source", "generate").get<std::string>();
  out["source"] = source;
  if (source == "generate") {
    const auto tag = datagen::experiment_from_string(with_default(out, "experiment", "").get<std::string>());
    std::size_t n_train = 5000, n_test = 1000;
    if (tag == datagen::Experiment::Sim31 || tag == datagen::Experiment::Sim32) n_train = 50000, n_test = 5000;
    if (tag == datagen::Experiment::Sim332) n_train = 10000, n_test = 500;
    datagen::GeneratorSpec spec;
    spec.experiment = tag;
    out["n_train"] = with_default(out, "n_train", n_train);
    out["n_test"] = with_default(out, "n_test", n_test);
    out["seed"] = with_default(out, "seed", seed);
    out["multiplier"] = with_default(out, "multiplier", spec.multiplier);
    json arch = with_default(out, "arch", json::object());
    arch["omega"] = with_default(arch, "omega", spec.arch.omega);
    arch["alpha"] = with_default(arch, "alpha", spec.arch.alpha);
    out["arch"] = arch;
    json arma = with_default(out, "arma", json::object());
    arma["ar"] = with_default(arma, "ar", spec.arma.ar);
    arma["ma"] = with_default(arma, "ma", spec.arma.ma);
    out["arma"] = arma;
    spec.noise_scale = with_default(out, "noise_scale", -1.0).get<double>();
    out["noise_scale"] = spec.effective_noise_scale();
  } else if (source == "uea") {
    if (!out.contains("train") || !out.contains("test")) throw ConfigError("uea data needs 'train' and 'test' paths");
  } else if (source == "csv") {
    if (!out.contains("dir") || !out.contains("task")) throw ConfigError("csv data needs 'dir' and 'task'");
    out["num_classes"] = with_default(out, "num_classes", 0);
    out["train_prefix"] = with_default(out, "train_prefix", "train");
    out["test_prefix"] = with_default(out, "test_prefix", "test");
  } else {
    throw ConfigError("unknown data source '" + source + "' (expected generate, uea or csv)");
  }
  return out;
}

json resolve_model(const json& model) {
  json out = model.is_object() ? model : json::object();
  const std::string type = with_default(out, "type", "feats").get<std::string>();
  out["type"] = type;
  out["standardize"] = with_default(out, "standardize", true);
  if (type == "feats") {
    out["heads"] = with_default(out, "heads", nullptr);
    out["tau"] = with_default(out, "tau", nullptr);
    out["kernel_hidden"] = with_default(out, "kernel_hidden", std::vector<std::size_t>{10, 10});
    out["time_hidden"] = with_default(out, "time_hidden", std::vector<std::size_t>{10, 10});
    out["ridge_hidden"] = with_default(out, "ridge_hidden", std::vector<std::size_t>{10, 10});
    out["feature_attention_hidden"] = with_default(out, "feature_attention_hidden", std::vector<std::size_t>{10, 10});
    out["downstream"] = with_default(out, "downstream", "auto");
    json pen = with_default(out, "penalty", json::object());
    pen["l1"] = with_default(pen, "l1", 0.0);
    pen["l2"] = with_default(pen, "l2", 0.0);
    out["penalty"] = pen;
    out["head_configs"] = with_default(out, "head_configs", nullptr);
  } else if (type == "ffnn") {
    out["hidden"] = with_default(out, "hidden", std::vector<std::size_t>{40, 40});
  } else {
    throw ConfigError("unknown model type '" + type + "' (expected feats or ffnn)");
  }
  return out;
}

json resolve_train(const json& train) {
  json out = train.is_object() ? train : json::object();
  TrainConfig d;
  out["learning_rate"] = with_default(out, "learning_rate", d.learning_rate);
  out["batch_size"] = with_default(out, "batch_size", d.batch_size);
  out["max_epochs"] = with_default(out, "max_epochs", d.max_epochs);
  out["patience"] = with_default(out, "patience", d.patience);
  out["validation_fraction"] = with_default(out, "validation_fraction", d.validation_fraction);
  out["time_budget"] = with_default(out, "time_budget", nullptr);
  out["lr_patience"] = with_default(out, "lr_patience", d.lr_patience);
  out["lr_factor"] = with_default(out, "lr_factor", d.lr_factor);
  out["min_learning_rate"] = with_default(out, "min_learning_rate", d.min_learning_rate);
  return out;
}

}  // namespace

json resolve_config(const json& config) {
  if (!config.is_object()) throw ConfigError("experiment config must be a JSON object");
  if (!config.contains("seed") || !config.at("seed").is_number_integer())
    throw ConfigError("experiment config needs an integer 'seed'");
  try {
    json out = config;
    const auto seed = config.at("seed").get<std::uint64_t>();
    out["output_dir"] = with_default(config, "output_dir", "feats-run");
    out["data"] = resolve_data(with_default(config, "data", json::object()), seed);
    out["model"] = resolve_model(with_default(config, "model", json::object()));
    out["train"] = resolve_train(with_default(config, "train", json::object()));
    json baseline = with_default(config, "baseline", nullptr);
    if (baseline.is_object()) baseline["hidden"] = with_default(baseline, "hidden", std::vector<std::size_t>{40, 40});
    out["baseline"] = baseline;
    json explain = with_default(config, "explain", json::object());
    explain["samples"] = with_default(explain, "samples", 100);
    json grid = with_default(explain, "ridge_grid", json::object());
    grid["min"] = with_default(grid, "min", -3.0);
    grid["max"] = with_default(grid, "max", 3.0);
    grid["points"] = with_default(grid, "points", 61);
    explain["ridge_grid"] = grid;
    out["explain"] = explain;
    return out;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("invalid experiment config: ") + e.what());
  }
}

TrainConfig train_config_from_json(const json& train, std::uint64_t seed) {
  const json t = resolve_train(train);
  TrainConfig c;
  c.seed = seed;
  c.learning_rate = t.at("learning_rate").get<double>();
  c.batch_size = t.at("batch_size").get<std::size_t>();
  c.max_epochs = t.at("max_epochs").get<std::size_t>();
  c.patience = t.at("patience").get<std::size_t>();
  c.validation_fraction = t.at("validation_fraction").get<double>();
  if (!t.at("time_budget").is_null()) c.time_budget = t.at("time_budget").get<double>();
  c.lr_patience = t.at("lr_patience").get<std::size_t>();
  c.lr_factor = t.at("lr_factor").get<double>();
  c.min_learning_rate = t.at("min_learning_rate").get<double>();
  c.validate();
  return c;
}

FeatsConfig feats_config_from_json(const json& model, const PanelDataset& data, std::uint64_t seed) {
  const json m = resolve_model(model);
  FeatsConfig c;
  c.series = data.series;
  c.time_points = data.time_points;
  c.covariates = data.covariates;
  c.task = task_for(data.target_kind);
  c.num_classes = data.target_kind == TargetKind::Multiclass ? data.num_classes : 2;
  c.seed = seed;
  c.standardize = m.at("standardize").get<bool>();
  c.ridge_hidden = m.at("ridge_hidden").get<std::vector<std::size_t>>();
  c.feature_attention_hidden = m.at("feature_attention_hidden").get<std::vector<std::size_t>>();
  c.penalty = {m.at("penalty").at("l1").get<double>(), m.at("penalty").at("l2").get<double>()};
  const std::string ds = m.at("downstream").get<std::string>();
  if (ds == "auto") {
    c.downstream = c.task == Task::Regression ? DownstreamKind::Linear
                   : c.task == Task::Binary   ? DownstreamKind::Logistic
                                              : DownstreamKind::Softmax;
  } else {
    c.downstream = downstream_from_string(ds);
  }

  nn::HeadConfig base;
  const std::size_t t = data.time_points - 1;
  base.tau = m.at("tau").is_null() ? std::min<std::size_t>(3, t / 5) : m.at("tau").get<std::size_t>();
  base.kernel_hidden = m.at("kernel_hidden").get<std::vector<std::size_t>>();
  base.time_hidden = m.at("time_hidden").get<std::vector<std::size_t>>();
  if (m.at("head_configs").is_array()) {
    for (const json& h : m.at("head_configs")) {
      nn::HeadConfig hc = base;
      if (h.contains("tau")) hc.tau = h.at("tau").get<std::size_t>();
      if (h.contains("kernel_hidden")) hc.kernel_hidden = h.at("kernel_hidden").get<std::vector<std::size_t>>();
      if (h.contains("time_hidden")) hc.time_hidden = h.at("time_hidden").get<std::vector<std::size_t>>();
      if (h.contains("series_subset")) hc.series_subset = h.at("series_subset").get<std::vector<std::size_t>>();
      if (h.contains("time_window") && !h.at("time_window").is_null())
        hc.time_window = std::make_pair(h.at("time_window").at(0).get<std::size_t>(),
                                        h.at("time_window").at(1).get<std::size_t>());
      c.heads.push_back(hc);
    }
  } else {
    const std::size_t count = m.at("heads").is_null() ? data.series : m.at("heads").get<std::size_t>();
    c.heads.assign(count, base);
  }
  c.validate();
  return c;
}

FfnnConfig ffnn_config_from_json(const json& model, const PanelDataset& data, std::uint64_t seed) {
  FfnnConfig c;
  c.series = data.series;
  c.time_points = data.time_points;
  c.covariates = data.covariates;
  c.task = task_for(data.target_kind);
  c.num_classes = data.target_kind == TargetKind::Multiclass ? data.num_classes : 2;
  c.seed = seed;
  c.standardize = with_default(model, "standardize", true).get<bool>();
  c.hidden = with_default(model, "hidden", std::vector<std::size_t>{40, 40}).get<std::vector<std::size_t>>();
  return c;
}

json report_json(const metrics::Report& r) {
  json out = {{"task", to_string(r.task)}, {"n", r.n}};
  auto opt = [](const std::optional<double>& v) { return v ? json(*v) : json(nullptr); };
  if (r.mse) out["mse"] = *r.mse;
  if (r.r2) out["r2"] = *r.r2;
  if (r.accuracy) out["accuracy"] = *r.accuracy;
  if (r.cross_entropy) out["cross_entropy"] = *r.cross_entropy;
  if (!r.auc.empty()) {
    json auc = json::array();
    for (const auto& a : r.auc) auc.push_back(opt(a));
    out["auc"] = auc;
  }
  return out;
}

std::string sha256_file(const std::filesystem::path& path) {
  const std::string content = io::read_text(path);
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(content.data(), content.size(), digest, &len, EVP_sha256(), nullptr) != 1)
    throw DataError("cannot hash " + path.string());
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(kHex[digest[i] >> 4]);
    out.push_back(kHex[digest[i] & 15]);
  }
  return out;
}

namespace {

struct LoadedData {
  PanelDataset train;
  PanelDataset test;
  std::optional<datagen::GeneratedDataset> generated;
  json inputs = json::array();
};

LoadedData load_data(const json& data) {
  LoadedData out;
  const std::string source = data.at("source").get<std::string>();
  auto hash = [&](const std::filesystem::path& p) {
    out.inputs.push_back({{"path", p.string()}, {"sha256", sha256_file(p)}});
  };
  if (source == "generate") {
    datagen::GeneratorSpec spec;
    spec.experiment = datagen::experiment_from_string(data.at("experiment").get<std::string>());
    spec.n_train = data.at("n_train").get<std::size_t>();
    spec.n_test = data.at("n_test").get<std::size_t>();
    spec.seed = data.at("seed").get<std::uint64_t>();
    spec.multiplier = data.at("multiplier").get<double>();
    spec.arch = {data.at("arch").at("omega").get<double>(), data.at("arch").at("alpha").get<double>()};
    spec.arma.ar = data.at("arma").at("ar").get<std::array<double, 2>>();
    spec.arma.ma = data.at("arma").at("ma").get<std::array<double, 2>>();
    spec.noise_scale = data.at("noise_scale").get<double>();
    out.generated = datagen::generate(spec);
    out.train = out.generated->train.data;
    out.test = out.generated->test.data;
  } else if (source == "uea") {
    const std::filesystem::path tr = data.at("train").get<std::string>(), te = data.at("test").get<std::string>();
    out.train = load_uea_ts(tr);
    out.test = load_uea_ts(te);
    hash(tr);
    hash(te);
    if (out.train.class_names != out.test.class_names)
      throw DataError("train and test files declare different class labels");
    if (out.train.series != out.test.series || out.train.time_points != out.test.time_points)
      throw DataError("train and test files have different panel shapes");
  } else {
    const std::filesystem::path dir = data.at("dir").get<std::string>();
    const auto kind = target_kind_from_string(data.at("task").get<std::string>());
    const auto k = data.at("num_classes").get<std::size_t>();
    auto tr = PanelFiles::in_directory(dir, data.at("train_prefix").get<std::string>());
    auto te = PanelFiles::in_directory(dir, data.at("test_prefix").get<std::string>());
    out.train = load_panel_csv(tr, kind, k);
    out.test = load_panel_csv(te, kind, k ? k : out.train.num_classes);
    for (const auto* f : {&tr, &te}) {
      hash(f->x);
      hash(f->y);
      if (f->z) hash(*f->z);
    }
  }
  out.train.split = Split::Train;
  out.test.split = Split::Test;
  return out;
}

std::string history_csv(const TrainResult& r) {
  std::ostringstream out;
  out << "epoch,train_loss,validation_loss,learning_rate\n";
  for (const auto& e : r.history)
    out << e.epoch << ',' << io::format_double(e.train_loss) << ',' << io::format_double(e.validation_loss) << ','
        << io::format_double(e.learning_rate) << '\n';
  return out.str();
}

json history_json(const TrainResult& r) {
  json h = json::array();
  for (const auto& e : r.history)
    h.push_back({{"epoch", e.epoch},
                 {"train_loss", e.train_loss},
                 {"validation_loss", e.validation_loss},
                 {"learning_rate", e.learning_rate}});
  return h;
}

}  // namespace

ExperimentOutcome run_experiment(const json& doc, const std::optional<std::filesystem::path>& output_dir) {
  const auto wall_start = std::chrono::steady_clock::now();
  const json config = resolve_config(doc.is_object() && doc.contains("manifest_version") ? doc.at("config") : doc);
  ExperimentOutcome outcome;
  outcome.dir = output_dir ? *output_dir : std::filesystem::path(config.at("output_dir").get<std::string>());
  std::filesystem::create_directories(outcome.dir);
  const auto seed = config.at("seed").get<std::uint64_t>();

  json manifest = {{"manifest_version", kManifestVersion},
                   {"tool", "feats"},
                   {"version", kVersion},
                   {"config", config},
                   {"seed", seed},
                   {"kernels", kernels::active().name},
                   {"inputs", json::array()},
                   {"outputs", json::array()},
                   {"status", "running"}};
  std::string stage = "data";
  auto write = [&](const std::string& name, const std::string& content) {
    io::write_text_atomic(outcome.dir / name, content);
    manifest["outputs"].push_back(name);
  };

  try {
    LoadedData data = load_data(config.at("data"));
    manifest["inputs"] = data.inputs;

    stage = "train";
    const TrainConfig tc = train_config_from_json(config.at("train"), seed);
    auto [tr, val] = split_validation(data.train, tc.validation_fraction, seed);
    const json& model_cfg = config.at("model");
    std::unique_ptr<Network> model;
    if (model_cfg.at("type") == "feats")
      model = std::make_unique<FeatsModel>(feats_config_from_json(model_cfg, data.train, seed));
    else
      model = std::make_unique<FfnnModel>(ffnn_config_from_json(model_cfg, data.train, seed));
    const TrainResult result = train(*model, tr, val, tc);
    manifest["train_seconds"] = result.seconds;
    write("model.json", model_to_json(*model).dump(1) + "\n");
    write("history.csv", history_csv(result));

    stage = "evaluate";
    json metrics = {{"parameter_count", model->parameter_count()},
                    {"epochs_trained", result.history.size()},
                    {"best_epoch", result.best_epoch},
                    {"best_validation_loss", result.best_validation_loss},
                    {"early_stopped", result.early_stopped},
                    {"budget_exhausted", result.budget_exhausted},
                    {"history", history_json(result)}};
    metrics["train"] = report_json(metrics::evaluate(predict(*model, tr), tr, model->task()));
    metrics["validation"] = report_json(metrics::evaluate(predict(*model, val), val, model->task()));
    metrics["test"] = report_json(metrics::evaluate(predict(*model, data.test), data.test, model->task()));
    if (data.generated) {
      metrics["noise_variance"] = data.generated->noise_variance;
      if (!data.generated->test.log_odds.empty()) {
        const auto o = datagen::oracle_binary(data.generated->test.log_odds, data.test.y);
        metrics["oracle"] = {{"accuracy", o.accuracy}, {"auc", std::isfinite(o.auc) ? json(o.auc) : json(nullptr)}};
      }
    }

    if (config.at("baseline").is_object()) {
      stage = "baseline";
      FfnnConfig fc = ffnn_config_from_json(config.at("baseline"), data.train, seed);
      FfnnModel baseline(fc);
      const TrainResult br = train(baseline, tr, val, tc);
      manifest["baseline_train_seconds"] = br.seconds;
      metrics["baseline"] = {{"type", "ffnn"},
                             {"hidden", fc.hidden},
                             {"parameter_count", baseline.parameter_count()},
                             {"epochs_trained", br.history.size()},
                             {"test", report_json(metrics::evaluate(predict(baseline, data.test), data.test, baseline.task()))}};
    }

    if (auto* feats = dynamic_cast<FeatsModel*>(model.get())) {
      stage = "explain";
      const json& ex = config.at("explain");
      auto report = interpret::extract_weights(*feats, data.test);
      const std::size_t keep = std::min(report.n, ex.at("samples").get<std::size_t>());
      std::vector<std::size_t> first(keep);
      for (std::size_t i = 0; i < keep; ++i) first[i] = i;
      interpret::write_weights_csv(interpret::extract_weights(*feats, data.test.subset(first)), outcome.dir / "weights.csv");
      manifest["outputs"].push_back("weights.csv");
      if (report.n >= 2) {
        std::vector<interpret::VarianceTable> tables;
        for (std::size_t h = 0; h < report.heads(); ++h) tables.push_back(interpret::variance_decomposition(report, h));
        interpret::write_variance_csv(tables, outcome.dir / "variance.csv");
        manifest["outputs"].push_back("variance.csv");
      }
      if (report.n >= 5) {
        std::vector<std::vector<interpret::BoxStats>> boxes;
        for (std::size_t h = 0; h < report.heads(); ++h) boxes.push_back(interpret::component_distributions(report, h));
        interpret::write_boxstats_csv(boxes, outcome.dir / "boxstats.csv");
        manifest["outputs"].push_back("boxstats.csv");
      }
      if (data.generated && report.n >= 2) {
        const auto& g = *data.generated;
        std::vector<std::vector<double>> comps;
        for (std::size_t c = 0; c < g.num_components(); ++c) comps.push_back(g.test.component(c, g.num_components()));
        const auto table = interpret::align_heads(report.features, comps);
        interpret::write_alignment_csv(table, g.component_names, outcome.dir / "alignment.csv");
        manifest["outputs"].push_back("alignment.csv");
        json pairs = json::array();
        for (auto [h, c] : table.assignment)
          pairs.push_back({{"head", h}, {"component", g.component_names[c]}, {"abs_correlation", table.abs_correlation[h][c]},
                           {"correlation", table.correlation[h][c]}});
        metrics["alignment"] = {{"assignment", pairs}, {"score", table.score}, {"matrix", table.abs_correlation},
                                {"components", g.component_names}, {"warnings", table.warnings}};
      }
      if (feats->config().covariates) {
        const json& grid = ex.at("ridge_grid");
        const double lo = grid.at("min").get<double>(), hi = grid.at("max").get<double>();
        const auto points = grid.at("points").get<std::size_t>();
        if (points < 2) throw ConfigError("ridge grid needs at least 2 points");
        std::vector<double> z(points);
        for (std::size_t i = 0; i < points; ++i) z[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(points - 1);
        std::ostringstream out;
        out << "covariate,z,g\n";
        for (std::size_t c = 0; c < feats->config().covariates; ++c) {
          const auto g = feats->ridge_curve(c, z);
          for (std::size_t i = 0; i < points; ++i) out << c << ',' << io::format_double(z[i]) << ',' << io::format_double(g[i]) << '\n';
        }
        write("ridges.csv", out.str());
      }
    }

    stage = "write";
    outcome.metrics = metrics;
    write("metrics.json", metrics.dump(1) + "\n");
    manifest["status"] = "complete";
    manifest["partial_outputs"] = false;
  } catch (const std::exception& e) {
    manifest["status"] = "failed";
    manifest["failed_stage"] = stage;
    manifest["error"] = e.what();
    manifest["partial_outputs"] = true;
    manifest["wall_seconds"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - wall_start).count();
    io::write_text_atomic(outcome.dir / "manifest.json", manifest.dump(1) + "\n");
    throw;
  }
  manifest["wall_seconds"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - wall_start).count();
  io::write_text_atomic(outcome.dir / "manifest.json", manifest.dump(1) + "\n");
  outcome.manifest = manifest;
  return outcome;
}

}  // namespace feats::bench
