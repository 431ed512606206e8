#include "feats/panel_io.hpp"

#include <algorithm>
#include <charconv>
#include <cctype>
#include <cmath>
#include <map>
#include <set>
#include <sstream>
#include <string_view>
#include <tuple>

#include "feats/errors.hpp"
#include "feats/io.hpp"

namespace feats::bench {

PanelFiles PanelFiles::in_directory(const std::filesystem::path& dir, const std::string& prefix) {
  PanelFiles f;
  f.x = dir / (prefix + "_X.csv");
  f.y = dir / (prefix + "_y.csv");
  if (std::filesystem::exists(dir / (prefix + "_Z.csv"))) f.z = dir / (prefix + "_Z.csv");
  return f;
}

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t pos = line.find(sep, start);
    out.push_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

struct Location {
  const std::filesystem::path* file;
  std::size_t line;
  std::string str() const { return file->string() + ":" + std::to_string(line); }
};

double parse_double(std::string_view text, const Location& at, const char* what) {
  text = trim(text);
  double v = 0.0;
  auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (text.empty() || res.ec != std::errc() || res.ptr != text.data() + text.size() || !std::isfinite(v))
    throw ParseError(at.str() + ": " + what + " '" + std::string(text) + "' is not a finite number");
  return v;
}

std::int64_t parse_int(std::string_view text, const Location& at, const char* what) {
  text = trim(text);
  std::int64_t v = 0;
  auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (text.empty() || res.ec != std::errc() || res.ptr != text.data() + text.size())
    throw ParseError(at.str() + ": " + what + " '" + std::string(text) + "' is not an integer");
  return v;
}

std::size_t parse_index(std::string_view text, const Location& at, const char* what) {
  const auto v = parse_int(text, at, what);
  if (v < 0) throw ParseError(at.str() + ": " + what + " must be non-negative");
  return static_cast<std::size_t>(v);
}

// Calls fn(fields, location) for each data row after checking the header.
template <typename Fn>
void read_csv(const std::filesystem::path& path, const std::vector<std::string>& header,
              const std::vector<std::string>& optional_header, Fn fn) {
  const std::string text = io::read_text(path);
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  bool saw_header = false;
  std::size_t columns = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!saw_header) {
      if (lineno == 1 && line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
      auto cols = split(line, ',');
      std::vector<std::string> got;
      for (auto c : cols) got.emplace_back(trim(c));
      if (got != header && (optional_header.empty() || got != optional_header)) {
        std::string expected;
        for (const auto& h : header) expected += (expected.empty() ? "" : ",") + h;
        throw ParseError(Location{&path, lineno}.str() + ": expected header '" + expected + "'");
      }
      columns = got.size();
      saw_header = true;
      continue;
    }
    if (trim(line).empty()) continue;
    auto fields = split(line, ',');
    Location at{&path, lineno};
    if (fields.size() != columns)
      throw ParseError(at.str() + ": expected " + std::to_string(columns) + " fields, found " + std::to_string(fields.size()));
    fn(fields, at);
  }
  if (!saw_header) throw ParseError(path.string() + ": file is empty (header required)");
}

}  // namespace

PanelDataset load_panel_csv(const PanelFiles& files, TargetKind kind, std::size_t num_classes) {
  // (sample, series, time) -> value
  std::map<std::tuple<std::int64_t, std::size_t, std::size_t>, std::pair<double, std::size_t>> cells;
  std::set<std::int64_t> samples;
  std::size_t max_series = 0, max_time = 0;
  read_csv(files.x, {"sample_id", "series_id", "time", "value"}, {}, [&](const auto& f, const Location& at) {
    const auto key = std::make_tuple(parse_int(f[0], at, "sample_id"), parse_index(f[1], at, "series_id"),
                                     parse_index(f[2], at, "time"));
    const double v = parse_double(f[3], at, "value");
    auto [it, fresh] = cells.emplace(key, std::make_pair(v, at.line));
    if (!fresh)
      throw DataError(at.str() + ": duplicate cell (sample " + std::to_string(std::get<0>(key)) + ", series " +
                      std::to_string(std::get<1>(key)) + ", time " + std::to_string(std::get<2>(key)) +
                      "), first seen on line " + std::to_string(it->second.second));
    samples.insert(std::get<0>(key));
    max_series = std::max(max_series, std::get<1>(key));
    max_time = std::max(max_time, std::get<2>(key));
  });
  if (cells.empty()) throw DataError(files.x.string() + ": no panel rows");

  PanelDataset d;
  d.n = samples.size();
  d.series = max_series + 1;
  d.time_points = max_time + 1;
  d.target_kind = kind;
  d.sample_ids.assign(samples.begin(), samples.end());
  std::map<std::int64_t, std::size_t> row_of;
  for (std::size_t i = 0; i < d.n; ++i) row_of[d.sample_ids[i]] = i;

  d.x.resize(d.n * d.series * d.time_points);
  auto it = cells.begin();
  for (std::size_t i = 0; i < d.n; ++i)
    for (std::size_t j = 0; j < d.series; ++j)
      for (std::size_t k = 0; k < d.time_points; ++k) {
        const auto key = std::make_tuple(d.sample_ids[i], j, k);
        if (it == cells.end() || it->first != key)
          throw DataError(files.x.string() + ": missing cell (sample " + std::to_string(d.sample_ids[i]) + ", series " +
                          std::to_string(j) + ", time " + std::to_string(k) + ")");
        d.x[(i * d.series + j) * d.time_points + k] = it->second.first;
        ++it;
      }

  if (files.z) {
    std::map<std::pair<std::int64_t, std::size_t>, std::pair<double, std::size_t>> zc;
    std::size_t max_cov = 0;
    read_csv(*files.z, {"sample_id", "covariate_id", "value"}, {}, [&](const auto& f, const Location& at) {
      const auto key = std::make_pair(parse_int(f[0], at, "sample_id"), parse_index(f[1], at, "covariate_id"));
      if (!row_of.count(key.first))
        throw DataError(at.str() + ": sample " + std::to_string(key.first) + " has no panel rows");
      auto [pos, fresh] = zc.emplace(key, std::make_pair(parse_double(f[2], at, "value"), at.line));
      if (!fresh)
        throw DataError(at.str() + ": duplicate covariate (sample " + std::to_string(key.first) + ", covariate " +
                        std::to_string(key.second) + "), first seen on line " + std::to_string(pos->second.second));
      max_cov = std::max(max_cov, key.second);
    });
    if (!zc.empty()) {
      d.covariates = max_cov + 1;
      d.z.resize(d.n * d.covariates);
      for (std::size_t i = 0; i < d.n; ++i)
        for (std::size_t c = 0; c < d.covariates; ++c) {
          auto pos = zc.find({d.sample_ids[i], c});
          if (pos == zc.end())
            throw DataError(files.z->string() + ": missing covariate (sample " + std::to_string(d.sample_ids[i]) +
                            ", covariate " + std::to_string(c) + ")");
          d.z[i * d.covariates + c] = pos->second.first;
        }
    }
  }

  std::vector<bool> seen(d.n, false);
  d.y.assign(d.n, 0.0);
  d.weights.assign(d.n, 1.0);
  read_csv(files.y, {"sample_id", "target"}, {"sample_id", "target", "weight"}, [&](const auto& f, const Location& at) {
    const auto id = parse_int(f[0], at, "sample_id");
    auto pos = row_of.find(id);
    if (pos == row_of.end()) throw DataError(at.str() + ": sample " + std::to_string(id) + " has no panel rows");
    if (seen[pos->second]) throw DataError(at.str() + ": duplicate target for sample " + std::to_string(id));
    seen[pos->second] = true;
    d.y[pos->second] = parse_double(f[1], at, "target");
    if (f.size() == 3) {
      const double w = parse_double(f[2], at, "weight");
      if (!(w > 0.0)) throw DataError(at.str() + ": weight must be positive");
      d.weights[pos->second] = w;
    }
  });
  for (std::size_t i = 0; i < d.n; ++i)
    if (!seen[i]) throw DataError(files.y.string() + ": missing target for sample " + std::to_string(d.sample_ids[i]));

  if (kind == TargetKind::Multiclass) {
    double top = 0.0;
    for (double v : d.y) top = std::max(top, v);
    d.num_classes = num_classes ? num_classes : static_cast<std::size_t>(top) + 1;
  } else if (kind == TargetKind::Binary) {
    d.num_classes = 2;
  }
  d.validate();
  return d;
}

void write_panel_csv(const PanelDataset& data, const PanelFiles& files) {
  data.validate();
  std::ostringstream x;
  x << "sample_id,series_id,time,value\n";
  for (std::size_t i = 0; i < data.n; ++i)
    for (std::size_t j = 0; j < data.series; ++j)
      for (std::size_t k = 0; k < data.time_points; ++k)
        x << data.sample_ids[i] << ',' << j << ',' << k << ',' << io::format_double(data.x_at(i, j, k)) << '\n';
  io::write_text_atomic(files.x, x.str());
  if (data.covariates) {
    if (!files.z) throw ArgumentError("panel has covariates but no Z path was given");
    std::ostringstream z;
    z << "sample_id,covariate_id,value\n";
    for (std::size_t i = 0; i < data.n; ++i)
      for (std::size_t c = 0; c < data.covariates; ++c)
        z << data.sample_ids[i] << ',' << c << ',' << io::format_double(data.z[i * data.covariates + c]) << '\n';
    io::write_text_atomic(*files.z, z.str());
  }
  const bool weighted = std::any_of(data.weights.begin(), data.weights.end(), [](double w) { return w != 1.0; });
  std::ostringstream y;
  y << (weighted ? "sample_id,target,weight\n" : "sample_id,target\n");
  for (std::size_t i = 0; i < data.n; ++i) {
    y << data.sample_ids[i] << ',' << io::format_double(data.y[i]);
    if (weighted) y << ',' << io::format_double(data.weights[i]);
    y << '\n';
  }
  io::write_text_atomic(files.y, y.str());
}

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

bool truthy(std::string_view v, const Location& at, const char* tag) {
  const auto l = lower(trim(v));
  if (l == "true") return true;
  if (l == "false") return false;
  throw ParseError(at.str() + ": " + tag + " expects true or false");
}

}  // namespace

PanelDataset load_uea_ts(const std::filesystem::path& path) {
  const std::string text = io::read_text(path);
  std::istringstream in(text);
  std::string raw;
  std::size_t lineno = 0;
  bool in_data = false, has_labels = false;
  std::optional<std::size_t> dims, series_length;
  std::vector<std::string> classes;
  std::string problem;

  PanelDataset d;
  d.target_kind = TargetKind::Multiclass;
  while (std::getline(in, raw)) {
    ++lineno;
    Location at{&path, lineno};
    std::string_view line = trim(raw);
    if (line.empty() || line.front() == '#') continue;
    if (!in_data) {
      if (line.front() != '@') throw ParseError(at.str() + ": expected a header tag before @data");
      const auto space = line.find_first_of(" \t");
      const std::string tag = lower(line.substr(0, space));
      const std::string_view value = space == std::string_view::npos ? std::string_view{} : trim(line.substr(space));
      if (tag == "@problemname") {
        problem = std::string(value);
      } else if (tag == "@timestamps") {
        if (truthy(value, at, "@timeStamps")) throw UnsupportedFeatureError(at.str() + ": timestamped series are not supported");
      } else if (tag == "@missing") {
        if (truthy(value, at, "@missing")) throw UnsupportedFeatureError(at.str() + ": series with missing values are not supported");
      } else if (tag == "@univariate") {
        if (truthy(value, at, "@univariate")) dims = 1;
      } else if (tag == "@dimensions" || tag == "@dimension") {
        dims = parse_index(value, at, "@dimensions");
      } else if (tag == "@equallength") {
        if (!truthy(value, at, "@equalLength")) throw UnsupportedFeatureError(at.str() + ": only equal-length series are supported");
      } else if (tag == "@serieslength") {
        series_length = parse_index(value, at, "@seriesLength");
      } else if (tag == "@classlabel") {
        std::istringstream tokens{std::string(value)};
        std::string token;
        tokens >> token;
        if (lower(token) != "true") throw UnsupportedFeatureError(at.str() + ": only labelled classification files are supported");
        while (tokens >> token) classes.push_back(token);
        if (classes.size() < 2) throw DataError(at.str() + ": @classLabel declares fewer than 2 classes");
        has_labels = true;
      } else if (tag == "@data") {
        if (!has_labels) throw ParseError(at.str() + ": @classLabel header missing before @data");
        in_data = true;
      } else if (tag == "@targetlabel") {
        throw UnsupportedFeatureError(at.str() + ": regression .ts files are not supported");
      }
      continue;
    }

    auto parts = split(line, ':');
    if (parts.size() < 2) throw ParseError(at.str() + ": data line has no class label");
    const std::string label(trim(parts.back()));
    parts.pop_back();
    if (!dims) dims = parts.size();
    if (parts.size() != *dims)
      throw ParseError(at.str() + ": expected " + std::to_string(*dims) + " dimensions, found " + std::to_string(parts.size()));
    auto cls = std::find(classes.begin(), classes.end(), label);
    if (cls == classes.end()) throw DataError(at.str() + ": class label '" + label + "' is not declared in @classLabel");
    for (std::size_t j = 0; j < parts.size(); ++j) {
      auto values = split(trim(parts[j]), ',');
      if (!series_length) series_length = values.size();
      if (values.size() != *series_length)
        throw UnsupportedFeatureError(at.str() + ": dimension " + std::to_string(j) + " has length " +
                                      std::to_string(values.size()) + ", expected " + std::to_string(*series_length) +
                                      " (unequal lengths are not supported)");
      for (auto v : values) {
        if (trim(v) == "?" || lower(trim(v)) == "nan")
          throw UnsupportedFeatureError(at.str() + ": missing values are not supported");
        d.x.push_back(parse_double(v, at, "value"));
      }
    }
    d.y.push_back(static_cast<double>(cls - classes.begin()));
    d.sample_ids.push_back(static_cast<std::int64_t>(d.n));
    ++d.n;
  }
  if (!in_data) throw ParseError(path.string() + ": no @data section");
  if (d.n == 0) throw DataError(path.string() + ": no samples");
  d.series = *dims;
  d.time_points = *series_length;
  d.num_classes = classes.size();
  d.class_names = classes;
  d.weights.assign(d.n, 1.0);
  d.validate();
  return d;
}

}  // namespace feats::bench
