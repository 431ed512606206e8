#include "feats/serialize.hpp"

#include <map>

#include "feats/errors.hpp"
#include "feats/io.hpp"

namespace feats {

using nlohmann::json;

namespace {

json tensor_json(const Tensor& t) { return {{"shape", t.shape()}, {"values", std::vector<double>(t.data().begin(), t.data().end())}}; }

json params_json(const std::vector<Parameter*>& params) {
  json out = json::object();
  for (const Parameter* p : params) out[p->name] = tensor_json(p->value);
  return out;
}

void load_params(const json& doc, const std::vector<Parameter*>& params, const std::string& where) {
  if (!doc.is_object()) throw ParseError(where + ": weights must be an object");
  if (doc.size() != params.size())
    throw ParseError(where + ": expected " + std::to_string(params.size()) + " parameters, found " +
                     std::to_string(doc.size()));
  for (Parameter* p : params) {
    auto it = doc.find(p->name);
    if (it == doc.end()) throw ParseError(where + ": missing parameter '" + p->name + "'");
    const auto shape = it->at("shape").get<Shape>();
    auto values = it->at("values").get<std::vector<double>>();
    if (shape != p->value.shape() || values.size() != p->value.size())
      throw ParseError(where + ": parameter '" + p->name + "' has shape " + to_string(shape) + ", expected " +
                       to_string(p->value.shape()));
    p->value = Tensor(shape, std::move(values));
    if (!p->value.all_finite()) throw ParseError(where + ": parameter '" + p->name + "' holds non-finite values");
    p->zero_grad();
  }
}

json standardizer_json(const Standardizer& s) {
  return {{"series_mean", s.series_mean},
          {"series_scale", s.series_scale},
          {"covariate_mean", s.covariate_mean},
          {"covariate_scale", s.covariate_scale}};
}

Standardizer standardizer_from(const json& doc, std::size_t series, std::size_t covariates) {
  Standardizer s;
  s.series_mean = doc.at("series_mean").get<std::vector<double>>();
  s.series_scale = doc.at("series_scale").get<std::vector<double>>();
  s.covariate_mean = doc.at("covariate_mean").get<std::vector<double>>();
  s.covariate_scale = doc.at("covariate_scale").get<std::vector<double>>();
  if (s.series_mean.size() != series || s.series_scale.size() != series || s.covariate_mean.size() != covariates ||
      s.covariate_scale.size() != covariates)
    throw ParseError("standardizer does not match the panel shape");
  for (double v : s.series_scale)
    if (!(v > 0.0)) throw ParseError("standardizer scales must be positive");
  for (double v : s.covariate_scale)
    if (!(v > 0.0)) throw ParseError("standardizer scales must be positive");
  return s;
}

json common_json(const Network& model, const char* type, std::uint64_t seed, std::size_t series, std::size_t time_points,
                 std::size_t covariates, std::size_t num_classes) {
  return {{"format_version", kModelFormatVersion},
          {"model_type", type},
          {"created_with_seed", seed},
          {"m", series},
          {"T", time_points - 1},
          {"p", covariates},
          {"task", to_string(model.task())},
          {"num_classes", num_classes},
          {"standardize", model.standardize()},
          {"prepared", model.prepared()},
          {"standardizer", standardizer_json(model.standardizer())}};
}

json feats_json(FeatsModel model) {
  const auto& c = model.config();
  json doc = common_json(model, "feats", c.seed, c.series, c.time_points, c.covariates, c.num_classes);
  json heads = json::array();
  for (auto& h : model.heads()) {
    const auto& hc = h.config();
    json window = hc.time_window ? json::array({hc.time_window->first, hc.time_window->second}) : json(nullptr);
    heads.push_back({{"tau", hc.tau},
                     {"subnet_widths", {{"kernel", h.conv().kernel().widths()}, {"time", h.time().subnet().widths()}}},
                     {"kernel_hidden", hc.kernel_hidden},
                     {"time_hidden", hc.time_hidden},
                     {"series_subset", hc.series_subset},
                     {"time_window", window},
                     {"weights", params_json(h.parameters())}});
  }
  doc["heads"] = heads;
  json gamnets = json::array();
  for (auto& r : model.ridges())
    gamnets.push_back({{"subnet_widths", r.subnet().widths()}, {"weights", params_json(r.parameters())}});
  doc["gamnets"] = gamnets;
  doc["ridge_hidden"] = c.ridge_hidden;
  json downstream = {{"type", to_string(c.downstream)}};
  if (c.downstream == DownstreamKind::FeatureAttention) {
    downstream["hidden"] = c.feature_attention_hidden;
    downstream["weights"] = params_json(model.feature_attention().parameters());
  } else {
    downstream["weights"] = params_json({&model.linear_weight(), &model.linear_bias()});
  }
  doc["downstream"] = downstream;
  doc["penalties"] = {{"l1", c.penalty.l1}, {"l2", c.penalty.l2}};
  return doc;
}

json ffnn_json(FfnnModel model) {
  const auto& c = model.config();
  json doc = common_json(model, "ffnn", c.seed, c.series, c.time_points, c.covariates, c.num_classes);
  doc["hidden"] = c.hidden;
  doc["weights"] = params_json(model.net().parameters());
  return doc;
}

std::unique_ptr<Network> feats_from(const json& doc) {
  FeatsConfig c;
  c.series = doc.at("m").get<std::size_t>();
  c.time_points = doc.at("T").get<std::size_t>() + 1;
  c.covariates = doc.at("p").get<std::size_t>();
  c.task = task_from_string(doc.at("task").get<std::string>());
  c.num_classes = doc.at("num_classes").get<std::size_t>();
  c.standardize = doc.at("standardize").get<bool>();
  c.seed = doc.at("created_with_seed").get<std::uint64_t>();
  c.ridge_hidden = doc.at("ridge_hidden").get<std::vector<std::size_t>>();
  c.penalty = {doc.at("penalties").at("l1").get<double>(), doc.at("penalties").at("l2").get<double>()};
  const json& ds = doc.at("downstream");
  c.downstream = downstream_from_string(ds.at("type").get<std::string>());
  if (c.downstream == DownstreamKind::FeatureAttention) c.feature_attention_hidden = ds.at("hidden").get<std::vector<std::size_t>>();
  for (const json& h : doc.at("heads")) {
    nn::HeadConfig hc;
    hc.tau = h.at("tau").get<std::size_t>();
    hc.kernel_hidden = h.at("kernel_hidden").get<std::vector<std::size_t>>();
    hc.time_hidden = h.at("time_hidden").get<std::vector<std::size_t>>();
    hc.series_subset = h.at("series_subset").get<std::vector<std::size_t>>();
    const json& w = h.at("time_window");
    if (!w.is_null()) hc.time_window = std::make_pair(w.at(0).get<std::size_t>(), w.at(1).get<std::size_t>());
    c.heads.push_back(hc);
  }
  if (doc.at("gamnets").size() != c.covariates) throw ParseError("expected one ridge net per static covariate");

  auto model = std::make_unique<FeatsModel>(c);
  const json& heads = doc.at("heads");
  for (std::size_t i = 0; i < c.heads.size(); ++i)
    load_params(heads[i].at("weights"), model->heads()[i].parameters(), "head " + std::to_string(i));
  for (std::size_t j = 0; j < c.covariates; ++j)
    load_params(doc.at("gamnets")[j].at("weights"), model->ridges()[j].parameters(), "gamnet " + std::to_string(j));
  if (c.downstream == DownstreamKind::FeatureAttention)
    load_params(ds.at("weights"), model->feature_attention().parameters(), "downstream");
  else
    load_params(ds.at("weights"), {&model->linear_weight(), &model->linear_bias()}, "downstream");
  model->set_standardizer(standardizer_from(doc.at("standardizer"), c.series, c.covariates));
  if (doc.at("prepared").get<bool>()) model->mark_prepared();
  return model;
}

std::unique_ptr<Network> ffnn_from(const json& doc) {
  FfnnConfig c;
  c.series = doc.at("m").get<std::size_t>();
  c.time_points = doc.at("T").get<std::size_t>() + 1;
  c.covariates = doc.at("p").get<std::size_t>();
  c.task = task_from_string(doc.at("task").get<std::string>());
  c.num_classes = doc.at("num_classes").get<std::size_t>();
  c.standardize = doc.at("standardize").get<bool>();
  c.seed = doc.at("created_with_seed").get<std::uint64_t>();
  c.hidden = doc.at("hidden").get<std::vector<std::size_t>>();
  auto model = std::make_unique<FfnnModel>(c);
  load_params(doc.at("weights"), model->net().parameters(), "ffnn");
  model->set_standardizer(standardizer_from(doc.at("standardizer"), c.series, c.covariates));
  if (doc.at("prepared").get<bool>()) model->mark_prepared();
  return model;
}

}  // namespace

json model_to_json(const Network& model) {
  if (auto* f = dynamic_cast<const FeatsModel*>(&model)) return feats_json(*f);
  if (auto* f = dynamic_cast<const FfnnModel*>(&model)) return ffnn_json(*f);
  throw ArgumentError("cannot serialise this network type");
}

std::unique_ptr<Network> model_from_json(const json& doc) {
  if (!doc.is_object()) throw ParseError("model file is not a JSON object");
  auto version = doc.find("format_version");
  if (version == doc.end() || !version->is_number_integer()) throw ParseError("model file has no format_version");
  if (version->get<int>() != kModelFormatVersion)
    throw UnsupportedVersionError("model format version " + std::to_string(version->get<int>()) +
                                  " is not supported (expected " + std::to_string(kModelFormatVersion) + ")");
  try {
    const auto type = doc.at("model_type").get<std::string>();
    if (type == "feats") return feats_from(doc);
    if (type == "ffnn") return ffnn_from(doc);
    throw ParseError("unknown model_type '" + type + "'");
  } catch (const json::exception& e) {
    throw ParseError(std::string("malformed model file: ") + e.what());
  } catch (const ConfigError& e) {
    throw ParseError(std::string("model file describes an invalid model: ") + e.what());
  }
}

void save_model(const Network& model, const std::filesystem::path& path) {
  io::write_text_atomic(path, model_to_json(model).dump(1) + "\n");
}

std::unique_ptr<Network> load_model(const std::filesystem::path& path) {
  const std::string text = io::read_text(path);
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(path.string() + " is truncated or not valid JSON: " + e.what());
  }
  return model_from_json(doc);
}

}  // namespace feats
