#include "feats/layers.hpp"

#include <cmath>
#include <string>

#include "feats/errors.hpp"
#include "feats/ops.hpp"

namespace feats::nn {

Subnet::Subnet(std::string name, std::vector<std::size_t> widths, CounterRng& rng) : widths_(std::move(widths)) {
  if (widths_.size() < 2) throw ConfigError("subnet '" + name + "' needs at least input and output widths");
  for (auto w : widths_)
    if (w == 0) throw ConfigError("subnet '" + name + "' has a zero-width layer");
  for (std::size_t i = 0; i + 1 < widths_.size(); ++i) {
    const std::size_t fan_in = widths_[i], fan_out = widths_[i + 1];
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    Tensor w({fan_in, fan_out});
    for (auto& x : w.data()) x = (2.0 * rng.uniform() - 1.0) * limit;
    weights_.emplace_back(name + ".w" + std::to_string(i), std::move(w));
    biases_.emplace_back(name + ".b" + std::to_string(i), Tensor({fan_out}, 0.0));
  }
}

Var Subnet::forward(Graph& graph, Var x) {
  if (x.value().cols() != input_size())
    throw DimensionError("subnet expects " + std::to_string(input_size()) + " inputs, got " + to_string(x.shape()));
  Var h = x;
  for (std::size_t i = 0; i < weights_.size(); ++i) {
    h = add_bias(matmul(h, graph.parameter(weights_[i])), graph.parameter(biases_[i]));
    if (i + 1 < weights_.size()) h = relu(h);
  }
  return h;
}

Tensor Subnet::evaluate(const Tensor& x) const {
  if (x.cols() != input_size())
    throw DimensionError("subnet expects " + std::to_string(input_size()) + " inputs, got " + to_string(x.shape()));
  Tensor h = x.rank() == 1 ? x.reshaped({1, x.size()}) : x;
  for (std::size_t i = 0; i < weights_.size(); ++i) {
    h = matmul(h, weights_[i].value);
    const std::size_t c = h.cols();
    for (std::size_t r = 0; r < h.rows(); ++r)
      for (std::size_t j = 0; j < c; ++j) h[r * c + j] += biases_[i].value[j];
    if (i + 1 < weights_.size()) h = relu(h);
  }
  return h;
}

std::vector<Parameter*> Subnet::parameters() {
  std::vector<Parameter*> out;
  for (std::size_t i = 0; i < weights_.size(); ++i) {
    out.push_back(&weights_[i]);
    out.push_back(&biases_[i]);
  }
  return out;
}

std::vector<const Parameter*> Subnet::parameters() const {
  std::vector<const Parameter*> out;
  for (std::size_t i = 0; i < weights_.size(); ++i) {
    out.push_back(&weights_[i]);
    out.push_back(&biases_[i]);
  }
  return out;
}

Parameter make_scaling(std::string name, std::size_t length, double init) {
  return Parameter(std::move(name), Tensor({length}, init), /*scaling=*/true);
}

namespace {
std::vector<std::size_t> with_ends(std::size_t in, const std::vector<std::size_t>& hidden, std::size_t out) {
  std::vector<std::size_t> widths{in};
  widths.insert(widths.end(), hidden.begin(), hidden.end());
  widths.push_back(out);
  return widths;
}
}  // namespace

AttentionLayer::AttentionLayer(std::string name, std::size_t length, std::vector<std::size_t> hidden, CounterRng& rng)
    : subnet_(name + ".subnet", with_ends(length, hidden, length), rng), scaling_(make_scaling(name + ".s", length)) {}

AttentionTrace AttentionLayer::forward(Graph& graph, Var x) {
  if (x.value().cols() != length())
    throw DimensionError("attention layer over " + std::to_string(length()) + " positions got " + to_string(x.shape()));
  AttentionTrace trace;
  trace.attention = softmax_rows(subnet_.forward(graph, x));
  trace.weights = scale_columns(trace.attention, graph.parameter(scaling_));
  trace.feature = row_dot(trace.weights, x);
  return trace;
}

std::vector<Parameter*> AttentionLayer::parameters() {
  auto out = subnet_.parameters();
  out.push_back(&scaling_);
  return out;
}

ConvAttention::ConvAttention(std::string name, std::size_t series, std::size_t length, std::size_t tau,
                             std::vector<std::size_t> hidden, CounterRng& rng)
    : series_(series), length_(length), tau_(tau) {
  if (series == 0 || length == 0) throw ConfigError("convolutional attention needs at least one series and time point");
  if (tau + 1 > length)
    throw ConfigError("tau " + std::to_string(tau) + " exceeds T = " + std::to_string(length - 1));
  const std::size_t cells = series * (2 * tau + 1);
  kernel_ = Subnet(name + ".kernel", with_ends(cells, hidden, cells), rng);
  scaling_ = make_scaling(name + ".s1", cells);
}

ConvTrace ConvAttention::forward(Graph& graph, Var x) {
  ConvTrace trace;
  const std::size_t batch = x.value().rows();
  trace.patches = unfold_windows(x, series_, length_, tau_);
  trace.attention = softmax_rows(kernel_.forward(graph, trace.patches));
  trace.weights = scale_columns(trace.attention, graph.parameter(scaling_));
  trace.features = reshape(row_dot(trace.weights, trace.patches), {batch, length_});
  return trace;
}

std::vector<Parameter*> ConvAttention::parameters() {
  auto out = kernel_.parameters();
  out.push_back(&scaling_);
  return out;
}

FeatureHead::FeatureHead(std::string name, std::size_t series, std::size_t time_points, HeadConfig config,
                         CounterRng& rng)
    : config_(std::move(config)), series_(series), time_points_(time_points) {
  if (series == 0 || time_points == 0) throw ConfigError("head '" + name + "' needs a non-empty panel");
  for (auto j : config_.series_subset)
    if (j >= series)
      throw ConfigError("head '" + name + "' attends series " + std::to_string(j) + " of " + std::to_string(series));
  if (config_.time_window) {
    auto [first, last] = *config_.time_window;
    if (first > last || last >= time_points)
      throw ConfigError("head '" + name + "' has time window [" + std::to_string(first) + ", " + std::to_string(last) +
                        "] outside [0, " + std::to_string(time_points - 1) + "]");
  }
  const auto sub = subset();
  const auto [first, last] = window();
  const std::size_t local_len = last - first + 1;
  conv_ = ConvAttention(name + ".conv", sub.size(), local_len, config_.tau, config_.kernel_hidden, rng);
  time_ = AttentionLayer(name + ".time", local_len, config_.time_hidden, rng);

  const bool full = sub.size() == series && local_len == time_points;
  if (!full) {
    for (auto j : sub)
      for (std::size_t k = first; k <= last; ++k) view_columns_.push_back(static_cast<std::ptrdiff_t>(j * time_points + k));
  }
}

std::vector<std::size_t> FeatureHead::subset() const {
  if (!config_.series_subset.empty()) return config_.series_subset;
  std::vector<std::size_t> all(series_);
  for (std::size_t j = 0; j < series_; ++j) all[j] = j;
  return all;
}

std::pair<std::size_t, std::size_t> FeatureHead::window() const {
  if (config_.time_window) return *config_.time_window;
  return {0, time_points_ - 1};
}

HeadTrace FeatureHead::forward(Graph& graph, Var x) {
  if (x.value().cols() != series_ * time_points_)
    throw DimensionError("head expects rows of " + std::to_string(series_) + "x" + std::to_string(time_points_) +
                         " values, got " + to_string(x.shape()));
  Var local = view_columns_.empty() ? x : select_columns(x, view_columns_);
  HeadTrace trace;
  trace.conv = conv_.forward(graph, local);
  trace.time = time_.forward(graph, trace.conv.features);
  trace.feature = trace.time.feature;
  return trace;
}

Tensor FeatureHead::attribution(const HeadTrace& trace, std::size_t row) const {
  const Tensor& g1 = trace.conv.weights.value();  // [(B*L) x (m*w)]
  const Tensor& g2 = trace.time.weights.value();  // [B x L]
  const std::size_t len = conv_.length();
  const std::size_t width = conv_.window_width();
  const std::size_t cells = conv_.series() * width;
  const auto tau = static_cast<std::ptrdiff_t>(conv_.tau());
  if (row >= g2.rows()) throw DimensionError("attribution row " + std::to_string(row) + " outside batch");

  const auto sub = subset();
  const auto first = window().first;
  Tensor w({series_, time_points_}, 0.0);
  for (std::size_t j = 0; j < conv_.series(); ++j) {
    for (std::size_t k = 0; k < len; ++k) {
      double acc = 0.0;
      // Focal index k - l must stay inside [0, len).
      for (std::ptrdiff_t l = -tau; l <= tau; ++l) {
        const std::ptrdiff_t focal = static_cast<std::ptrdiff_t>(k) - l;
        if (focal < 0 || focal >= static_cast<std::ptrdiff_t>(len)) continue;
        const auto f = static_cast<std::size_t>(focal);
        acc += g1[(row * len + f) * cells + j * width + static_cast<std::size_t>(l + tau)] * g2[row * len + f];
      }
      w.at(sub[j], first + k) = acc;
    }
  }
  return w;
}

std::vector<Parameter*> FeatureHead::parameters() {
  auto out = conv_.parameters();
  auto t = time_.parameters();
  out.insert(out.end(), t.begin(), t.end());
  return out;
}

FeatureAttention::FeatureAttention(std::string name, std::size_t inputs, std::vector<std::size_t> hidden,
                                   CounterRng& rng)
    : subnet_(name + ".subnet", with_ends(inputs, hidden, inputs), rng),
      scaling_(make_scaling(name + ".s", inputs)),
      bias_(name + ".bias", Tensor({1}, 0.0)) {}

FeatureAttentionTrace FeatureAttention::forward(Graph& graph, Var o) {
  if (o.value().cols() != inputs())
    throw DimensionError("feature attention over " + std::to_string(inputs()) + " inputs got " + to_string(o.shape()));
  FeatureAttentionTrace trace;
  trace.gates = sigmoid(subnet_.forward(graph, o));
  Var combined = row_dot(scale_columns(trace.gates, graph.parameter(scaling_)), o);
  trace.output = add_bias(combined, graph.parameter(bias_));
  return trace;
}

std::vector<Parameter*> FeatureAttention::parameters() {
  auto out = subnet_.parameters();
  out.push_back(&scaling_);
  out.push_back(&bias_);
  return out;
}

RidgeNet::RidgeNet(std::string name, std::vector<std::size_t> hidden, CounterRng& rng)
    : subnet_(std::move(name), with_ends(1, hidden, 1), rng) {}

Var RidgeNet::forward(Graph& graph, Var z) { return subnet_.forward(graph, z); }

std::vector<double> RidgeNet::evaluate(std::span<const double> grid) const {
  if (grid.empty()) return {};
  Tensor z({grid.size(), 1}, std::vector<double>(grid.begin(), grid.end()));
  Tensor g = subnet_.evaluate(z);
  return {g.data().begin(), g.data().end()};
}

}  // namespace feats::nn
