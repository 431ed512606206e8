#include "feats/interpret.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "feats/errors.hpp"
#include "feats/io.hpp"

namespace feats::interpret {

AttributionReport extract_weights(FeatsModel& model, const PanelDataset& data, std::size_t batch_size) {
  if (!model.prepared()) throw StateError("model has not been fitted or loaded");
  const auto& cfg = model.config();
  if (data.series != cfg.series || data.time_points != cfg.time_points)
    throw DimensionError("data panel " + std::to_string(data.series) + "x" + std::to_string(data.time_points) +
                         " does not match model panel " + std::to_string(cfg.series) + "x" +
                         std::to_string(cfg.time_points));
  const std::size_t width = data.series * data.time_points, h = model.heads().size();
  AttributionReport r;
  r.n = data.n;
  r.series = data.series;
  r.time_points = data.time_points;
  r.sample_ids = data.sample_ids.empty() ? std::vector<std::int64_t>(data.n) : data.sample_ids;
  if (data.sample_ids.empty()) std::iota(r.sample_ids.begin(), r.sample_ids.end(), std::int64_t{0});
  r.inputs = Tensor({data.n, width});
  r.weights.assign(h, Tensor({data.n, width}));
  r.features.assign(h, std::vector<double>(data.n));

  std::vector<std::size_t> rows;
  for (std::size_t start = 0; start < data.n; start += batch_size) {
    rows.clear();
    for (std::size_t i = start; i < std::min(data.n, start + batch_size); ++i) rows.push_back(i);
    Batch batch = make_batch(data, rows, model.standardizer());
    Graph graph(Graph::Mode::Inference);
    auto trace = model.trace(graph, batch);
    std::copy_n(batch.x.raw(), rows.size() * width, r.inputs.raw() + start * width);
    for (std::size_t head = 0; head < h; ++head) {
      const auto& feats = trace.heads[head].feature.value();
      for (std::size_t b = 0; b < rows.size(); ++b) {
        Tensor w = model.heads()[head].attribution(trace.heads[head], b);
        const double* x = batch.x.raw() + b * width;
        double sum = 0.0;
        for (std::size_t c = 0; c < width; ++c) sum += w[c] * x[c];
        const double feature = feats[b];
        if (!(std::abs(sum - feature) <= kAdditivityTolerance * std::max(1.0, std::abs(feature))))
          throw ContractError("head " + std::to_string(head) + ", sample " + std::to_string(r.sample_ids[start + b]) +
                              ": weights reproduce " + io::format_double(sum) + " but the feature is " +
                              io::format_double(feature));
        std::copy_n(w.raw(), width, r.weights[head].raw() + (start + b) * width);
        r.features[head][start + b] = feature;
      }
    }
  }
  return r;
}

Components head_components(const AttributionReport& report, std::size_t head) {
  if (head >= report.heads()) throw ArgumentError("no head " + std::to_string(head));
  Components c;
  c.feature = report.features[head];
  c.by_series.assign(report.series, std::vector<double>(report.n, 0.0));
  c.by_time.assign(report.time_points, std::vector<double>(report.n, 0.0));
  const std::size_t width = report.series * report.time_points;
  for (std::size_t i = 0; i < report.n; ++i) {
    const double* w = report.weights[head].raw() + i * width;
    const double* x = report.inputs.raw() + i * width;
    for (std::size_t j = 0; j < report.series; ++j)
      for (std::size_t k = 0; k < report.time_points; ++k) {
        const double v = w[j * report.time_points + k] * x[j * report.time_points + k];
        c.by_series[j][i] += v;
        c.by_time[k][i] += v;
      }
  }
  return c;
}

double sample_variance(const std::vector<double>& values) {
  if (values.size() < 2) throw StatisticsError("variance needs at least 2 samples, got " + std::to_string(values.size()));
  if (std::all_of(values.begin(), values.end(), [&](double v) { return v == values.front(); })) return 0.0;
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(values.size());
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return ss / static_cast<double>(values.size() - 1);
}

VarianceTable variance_decomposition(const AttributionReport& report, std::size_t head) {
  if (report.n < 2) throw StatisticsError("variance decomposition needs at least 2 samples");
  const Components c = head_components(report, head);
  VarianceTable t;
  t.head = head;
  t.feature = sample_variance(c.feature);
  for (const auto& s : c.by_series) t.by_series.push_back(sample_variance(s));
  for (const auto& s : c.by_time) t.by_time.push_back(sample_variance(s));
  return t;
}

namespace {
double quantile(const std::vector<double>& sorted, double q) {
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return frac == 0.0 ? sorted[lo] : sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}
}  // namespace

BoxStats box_stats(std::string component, std::vector<double> values) {
  if (values.size() < 5)
    throw ArgumentError("box statistics need at least 5 samples, got " + std::to_string(values.size()));
  std::sort(values.begin(), values.end());
  return {std::move(component), values.front(), quantile(values, 0.25), quantile(values, 0.5), quantile(values, 0.75),
          values.back()};
}

std::vector<BoxStats> component_distributions(const AttributionReport& report, std::size_t head) {
  const Components c = head_components(report, head);
  std::vector<BoxStats> out;
  out.push_back(box_stats("feature", c.feature));
  for (std::size_t j = 0; j < c.by_series.size(); ++j) out.push_back(box_stats("series_" + std::to_string(j), c.by_series[j]));
  for (std::size_t k = 0; k < c.by_time.size(); ++k) out.push_back(box_stats("time_" + std::to_string(k), c.by_time[k]));
  return out;
}

double pearson(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) throw DimensionError("correlation of " + std::to_string(a.size()) + " and " + std::to_string(b.size()) + " values");
  if (a.size() < 2) throw StatisticsError("correlation needs at least 2 samples");
  const double n = static_cast<double>(a.size());
  const double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
  const double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  if (saa == 0.0 || sbb == 0.0) return 0.0;
  return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

namespace {

bool constant(const std::vector<double>& v) {
  return std::all_of(v.begin(), v.end(), [&](double x) { return x == v.front(); });
}

// Best injective map rows -> cols (rows <= cols) by depth-first enumeration.
void search(const std::vector<std::vector<double>>& score, std::size_t row, std::vector<bool>& used,
            std::vector<std::size_t>& current, double total, std::vector<std::size_t>& best, double& best_total) {
  if (row == score.size()) {
    if (total > best_total) {
      best_total = total;
      best = current;
    }
    return;
  }
  for (std::size_t c = 0; c < used.size(); ++c) {
    if (used[c]) continue;
    used[c] = true;
    current.push_back(c);
    search(score, row + 1, used, current, total + score[row][c], best, best_total);
    current.pop_back();
    used[c] = false;
  }
}

}  // namespace

AlignmentTable align_heads(const std::vector<std::vector<double>>& head_features,
                           const std::vector<std::vector<double>>& components) {
  AlignmentTable t;
  const std::size_t h = head_features.size(), c = components.size();
  for (std::size_t i = 0; i < h; ++i)
    if (!head_features[i].empty() && constant(head_features[i]))
      t.warnings.push_back("head " + std::to_string(i) + " feature has zero variance; correlations set to 0");
  for (std::size_t j = 0; j < c; ++j)
    if (!components[j].empty() && constant(components[j]))
      t.warnings.push_back("component " + std::to_string(j) + " has zero variance; correlations set to 0");
  t.correlation.assign(h, std::vector<double>(c, 0.0));
  t.abs_correlation.assign(h, std::vector<double>(c, 0.0));
  for (std::size_t i = 0; i < h; ++i)
    for (std::size_t j = 0; j < c; ++j) {
      t.correlation[i][j] = pearson(head_features[i], components[j]);
      t.abs_correlation[i][j] = std::abs(t.correlation[i][j]);
    }
  if (h == 0 || c == 0) return t;

  const bool transpose = h > c;  // enumerate over the smaller side
  std::vector<std::vector<double>> score = t.abs_correlation;
  if (transpose) {
    score.assign(c, std::vector<double>(h));
    for (std::size_t i = 0; i < h; ++i)
      for (std::size_t j = 0; j < c; ++j) score[j][i] = t.abs_correlation[i][j];
  }
  const std::size_t rows = score.size(), cols = score.front().size();

  std::vector<std::size_t> best;
  if (std::max(h, c) <= 8) {
    std::vector<bool> used(cols, false);
    std::vector<std::size_t> current;
    double best_total = -1.0;
    search(score, 0, used, current, 0.0, best, best_total);
  } else {
    t.exhaustive = false;
    best.assign(rows, 0);
    std::vector<bool> row_done(rows, false), col_used(cols, false);
    for (std::size_t step = 0; step < rows; ++step) {
      double top = -1.0;
      std::size_t br = 0, bc = 0;
      for (std::size_t r = 0; r < rows; ++r) {
        if (row_done[r]) continue;
        for (std::size_t col = 0; col < cols; ++col)
          if (!col_used[col] && score[r][col] > top) {
            top = score[r][col];
            br = r;
            bc = col;
          }
      }
      row_done[br] = true;
      col_used[bc] = true;
      best[br] = bc;
    }
  }
  for (std::size_t r = 0; r < rows; ++r) {
    const auto pair = transpose ? std::make_pair(best[r], r) : std::make_pair(r, best[r]);
    t.assignment.push_back(pair);
    t.score += t.abs_correlation[pair.first][pair.second];
  }
  std::sort(t.assignment.begin(), t.assignment.end());
  return t;
}

void write_weights_csv(const AttributionReport& report, const std::filesystem::path& path) {
  std::ostringstream out;
  out << "sample_id,head,series,time,weight\n";
  for (std::size_t i = 0; i < report.n; ++i)
    for (std::size_t h = 0; h < report.heads(); ++h)
      for (std::size_t j = 0; j < report.series; ++j)
        for (std::size_t k = 0; k < report.time_points; ++k)
          out << report.sample_ids[i] << ',' << h << ',' << j << ',' << k << ','
              << io::format_double(report.weight(h, i, j, k)) << '\n';
  io::write_text_atomic(path, out.str());
}

void write_variance_csv(const std::vector<VarianceTable>& tables, const std::filesystem::path& path) {
  std::ostringstream out;
  out << "head,component,kind,index,variance\n";
  for (const auto& t : tables) {
    out << t.head << ",feature,feature,," << io::format_double(t.feature) << '\n';
    for (std::size_t j = 0; j < t.by_series.size(); ++j)
      out << t.head << ",series_" << j << ",series," << j << ',' << io::format_double(t.by_series[j]) << '\n';
    for (std::size_t k = 0; k < t.by_time.size(); ++k)
      out << t.head << ",time_" << k << ",time," << k << ',' << io::format_double(t.by_time[k]) << '\n';
  }
  io::write_text_atomic(path, out.str());
}

void write_boxstats_csv(const std::vector<std::vector<BoxStats>>& per_head, const std::filesystem::path& path) {
  std::ostringstream out;
  out << "head,component,min,q1,median,q3,max\n";
  for (std::size_t h = 0; h < per_head.size(); ++h)
    for (const auto& b : per_head[h])
      out << h << ',' << b.component << ',' << io::format_double(b.min) << ',' << io::format_double(b.q1) << ','
          << io::format_double(b.median) << ',' << io::format_double(b.q3) << ',' << io::format_double(b.max) << '\n';
  io::write_text_atomic(path, out.str());
}

void write_alignment_csv(const AlignmentTable& table, const std::vector<std::string>& component_names,
                         const std::filesystem::path& path) {
  std::ostringstream out;
  out << "head,component,abs_correlation,correlation,assigned\n";
  for (std::size_t h = 0; h < table.correlation.size(); ++h)
    for (std::size_t c = 0; c < table.correlation[h].size(); ++c) {
      const bool assigned =
          std::find(table.assignment.begin(), table.assignment.end(), std::make_pair(h, c)) != table.assignment.end();
      const std::string name = c < component_names.size() ? component_names[c] : std::to_string(c);
      out << h << ',' << name << ',' << io::format_double(table.abs_correlation[h][c]) << ','
          << io::format_double(table.correlation[h][c]) << ',' << (assigned ? 1 : 0) << '\n';
    }
  io::write_text_atomic(path, out.str());
}

}  // namespace feats::interpret
