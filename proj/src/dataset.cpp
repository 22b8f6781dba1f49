#include "tsgc/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

#include "tsgc/common.hpp"

namespace tsgc {
namespace {

std::vector<std::string_view> split_fields(std::string_view line, char delim) {
  std::vector<std::string_view> out;
  if (delim == ' ') {
    std::size_t pos = 0;
    while (pos < line.size()) {
      const auto start = line.find_first_not_of(" ", pos);
      if (start == std::string_view::npos) break;
      const auto end = line.find(' ', start);
      out.push_back(line.substr(start, end == std::string_view::npos ? end : end - start));
      pos = end == std::string_view::npos ? line.size() : end;
    }
    return out;
  }
  std::size_t pos = 0;
  while (true) {
    const auto end = line.find(delim, pos);
    out.push_back(line.substr(pos, end == std::string_view::npos ? end : end - pos));
    if (end == std::string_view::npos) break;
    pos = end + 1;
  }
  return out;
}

char detect_delimiter(std::string_view line) {
  if (line.find('\t') != std::string_view::npos) return '\t';
  if (line.find(',') != std::string_view::npos) return ',';
  return ' ';
}

bool is_nan_token(std::string_view t) {
  t = trim(t);
  return t == "NaN" || t == "nan" || t == "NAN" || t == "?";
}

std::string read_all(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open file: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct RawRow {
  long long label;
  std::vector<double> values;
};

std::vector<RawRow> read_ucr_rows(const std::filesystem::path& path) {
  const std::string text = read_all(path);
  std::vector<RawRow> rows;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string::npos) end = text.size();
    std::string_view line(text.data() + pos, end - pos);
    pos = end + 1;
    ++line_no;
    line = trim(line);
    if (line.empty() || line.front() == '#') continue;

    const char delim = detect_delimiter(line);
    auto fields = split_fields(line, delim);
    const auto where = path.filename().string() + ":" + std::to_string(line_no);
    // Variable-length archive files pad short series with trailing NaN.
    while (!fields.empty() && is_nan_token(fields.back())) fields.pop_back();
    if (fields.size() < 2) throw Error(where + ": row has no values");

    RawRow row;
    double label_value = 0.0;
    try {
      label_value = parse_double(fields[0]);
    } catch (const Error& e) {
      throw Error(where + ": " + e.what());
    }
    if (!std::isfinite(label_value) || label_value != std::floor(label_value)) {
      throw Error(where + ": class label must be an integer");
    }
    row.label = static_cast<long long>(label_value);
    row.values.reserve(fields.size() - 1);
    for (std::size_t f = 1; f < fields.size(); ++f) {
      double v = 0.0;
      try {
        v = parse_double(fields[f]);
      } catch (const Error& e) {
        throw Error(where + ": " + e.what());
      }
      if (!std::isfinite(v)) throw Error(where + ": non-finite value in series");
      row.values.push_back(v);
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

Dataset assemble(std::string name, const std::vector<std::vector<RawRow>>& parts) {
  Dataset ds;
  ds.name = std::move(name);
  std::map<long long, int> remap;
  std::size_t idx = 0;
  for (const auto& part : parts) {
    for (const auto& row : part) {
      auto [it, inserted] = remap.try_emplace(row.label, static_cast<int>(remap.size()));
      TimeSeries ts;
      ts.id = std::to_string(idx++);
      ts.values = row.values;
      ts.label = it->second;
      ds.series.push_back(std::move(ts));
    }
  }
  if (ds.series.empty()) throw Error("no series in dataset '" + ds.name + "'");
  ds.num_classes = static_cast<int>(remap.size());
  return ds;
}

std::filesystem::path resolve_split(const std::filesystem::path& stem, const char* suffix) {
  for (const char* ext : {".tsv", ".txt", "", ".csv"}) {
    auto candidate = stem;
    candidate += suffix;
    candidate += ext;
    if (std::filesystem::is_regular_file(candidate)) return candidate;
  }
  throw Error("missing file: " + stem.string() + suffix + "[.tsv|.txt]");
}

std::string dataset_name(const std::filesystem::path& path) {
  std::string name = path.stem().string();
  for (const char* suffix : {"_TRAIN", "_TEST"}) {
    const std::string s(suffix);
    if (name.size() > s.size() && name.compare(name.size() - s.size(), s.size(), s) == 0) {
      name.erase(name.size() - s.size());
    }
  }
  return name;
}

}  // namespace

bool Dataset::has_labels() const {
  return !series.empty() &&
         std::all_of(series.begin(), series.end(), [](const TimeSeries& s) { return s.label.has_value(); });
}

std::vector<int> Dataset::labels() const {
  std::vector<int> out;
  out.reserve(series.size());
  for (const auto& s : series) {
    if (!s.label) throw Error("dataset '" + name + "' has unlabeled series");
    out.push_back(*s.label);
  }
  return out;
}

std::size_t Dataset::max_length() const {
  std::size_t m = 0;
  for (const auto& s : series) m = std::max(m, s.values.size());
  return m;
}

void Dataset::validate() const {
  if (series.size() < 2) throw Error("dataset '" + name + "' needs at least 2 series");
  for (const auto& s : series) {
    if (s.values.empty()) throw Error("series '" + s.id + "' is empty");
    for (double v : s.values) {
      if (!std::isfinite(v)) throw Error("series '" + s.id + "' has non-finite values");
    }
  }
  if (has_labels()) {
    if (!num_classes || *num_classes < 2) throw Error("labelled dataset needs K >= 2");
    for (const auto& s : series) {
      if (*s.label < 0 || *s.label >= *num_classes) throw Error("label out of range in '" + s.id + "'");
    }
  }
}

Split parse_split(const std::string& text) {
  if (text == "train") return Split::Train;
  if (text == "test") return Split::Test;
  if (text == "merged") return Split::Merged;
  throw Error("unknown split '" + text + "' (expected train, test or merged)");
}

std::string to_string(Split split) {
  switch (split) {
    case Split::Train: return "train";
    case Split::Test: return "test";
    case Split::Merged: return "merged";
  }
  return "train";
}

PriceNormalization parse_price_normalization(const std::string& text) {
  if (text == "none") return PriceNormalization::None;
  if (text == "zscore") return PriceNormalization::ZScore;
  if (text == "first-value") return PriceNormalization::FirstValue;
  throw Error("unknown normalization '" + text + "' (expected none, zscore or first-value)");
}

std::string to_string(PriceNormalization mode) {
  switch (mode) {
    case PriceNormalization::None: return "none";
    case PriceNormalization::ZScore: return "zscore";
    case PriceNormalization::FirstValue: return "first-value";
  }
  return "zscore";
}

Dataset load_ucr_file(const std::filesystem::path& path) {
  if (!std::filesystem::is_regular_file(path)) throw Error("missing file: " + path.string());
  return assemble(dataset_name(path), {read_ucr_rows(path)});
}

Dataset load_ucr(const std::filesystem::path& path, Split split) {
  if (std::filesystem::is_regular_file(path)) {
    if (split != Split::Merged) return load_ucr_file(path);
    // A direct split file with split=merged: pair it with its sibling.
    std::string stem = (path.parent_path() / dataset_name(path)).string();
    return load_ucr(stem, Split::Merged);
  }
  const auto name = path.filename().string();
  switch (split) {
    case Split::Train: return assemble(name, {read_ucr_rows(resolve_split(path, "_TRAIN"))});
    case Split::Test: return assemble(name, {read_ucr_rows(resolve_split(path, "_TEST"))});
    case Split::Merged:
      return assemble(name, {read_ucr_rows(resolve_split(path, "_TRAIN")),
                             read_ucr_rows(resolve_split(path, "_TEST"))});
  }
  throw Error("unreachable split");
}

Dataset load_price_csv(const std::filesystem::path& path, PriceNormalization normalize,
                       std::vector<std::string>* warnings) {
  if (!std::filesystem::is_regular_file(path)) throw Error("missing file: " + path.string());
  std::ifstream in(path);
  std::string line;
  std::vector<std::string> tickers;
  while (std::getline(in, line)) {
    if (!trim(line).empty()) break;
  }
  if (trim(line).empty()) throw Error("missing header in " + path.string());
  {
    auto fields = split_fields(trim(line), ',');
    if (fields.size() < 2) throw Error("missing header: expected date,ticker1,...");
    // A numeric first cell means the header row is absent.
    bool numeric = true;
    try {
      parse_double(fields[1]);
    } catch (const Error&) {
      numeric = false;
    }
    if (numeric) throw Error("missing header: first row looks like data");
    for (std::size_t f = 1; f < fields.size(); ++f) tickers.emplace_back(trim(fields[f]));
  }

  std::vector<std::string> dates;
  std::vector<std::vector<double>> rows;  // NaN marks a gap
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    const auto t = trim(line);
    if (t.empty()) continue;
    auto fields = split_fields(t, ',');
    if (fields.size() != tickers.size() + 1) {
      throw Error(path.filename().string() + ":" + std::to_string(line_no) + ": expected " +
                  std::to_string(tickers.size() + 1) + " fields");
    }
    dates.emplace_back(trim(fields[0]));
    std::vector<double> row(tickers.size(), std::nan(""));
    for (std::size_t c = 0; c < tickers.size(); ++c) {
      const auto cell = trim(fields[c + 1]);
      if (cell.empty() || is_nan_token(cell)) continue;
      try {
        const double v = parse_double(cell);
        if (std::isfinite(v)) row[c] = v;
      } catch (const Error& e) {
        throw Error(path.filename().string() + ":" + std::to_string(line_no) + ": " + e.what());
      }
    }
    rows.push_back(std::move(row));
  }

  for (std::size_t c = 0; c < tickers.size(); ++c) {
    std::size_t finite = 0;
    for (const auto& r : rows) finite += std::isfinite(r[c]) ? 1 : 0;
    if (finite < 2) throw Error("column '" + tickers[c] + "' has fewer than 2 finite values");
  }
  if (warnings && !std::is_sorted(dates.begin(), dates.end())) {
    warnings->push_back("dates are not monotonically increasing");
  }

  Dataset ds;
  ds.name = path.stem().string();
  ds.series.resize(tickers.size());
  std::size_t dropped = 0;
  for (std::size_t c = 0; c < tickers.size(); ++c) ds.series[c].id = tickers[c];
  for (const auto& r : rows) {
    if (!std::all_of(r.begin(), r.end(), [](double v) { return std::isfinite(v); })) {
      ++dropped;
      continue;
    }
    for (std::size_t c = 0; c < tickers.size(); ++c) ds.series[c].values.push_back(r[c]);
  }
  if (warnings && dropped > 0) {
    warnings->push_back("dropped " + std::to_string(dropped) + " date rows with missing prices");
  }
  if (ds.series.front().values.size() < 2) throw Error("fewer than 2 complete date rows");

  for (auto& s : ds.series) {
    switch (normalize) {
      case PriceNormalization::None: break;
      case PriceNormalization::ZScore: s = znormalize(s); break;
      case PriceNormalization::FirstValue: {
        const double first = s.values.front();
        if (first == 0.0) throw Error("column '" + s.id + "' starts at zero; cannot first-value normalize");
        for (auto& v : s.values) v /= first;
        s.values.front() = 1.0;
        break;
      }
    }
  }
  return ds;
}

TimeSeries znormalize(const TimeSeries& series) {
  const auto& v = series.values;
  if (v.empty()) throw Error("zero variance in series '" + series.id + "'");
  const double n = static_cast<double>(v.size());
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / n;
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  // Population (1/n) standard deviation, the usual z-normalization.
  const double sd = std::sqrt(ss / n);
  if (!(sd > 0.0) || sd < 1e-300) throw Error("zero variance in series '" + series.id + "'");
  TimeSeries out = series;
  for (auto& x : out.values) x = (x - mean) / sd;
  return out;
}

Dataset znormalize(const Dataset& ds) {
  Dataset out = ds;
  for (auto& s : out.series) s = znormalize(s);
  return out;
}

void save_ucr(const Dataset& ds, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  for (const auto& s : ds.series) {
    if (!s.label) throw Error("save_ucr: series '" + s.id + "' has no label");
    out << *s.label;
    for (double v : s.values) out << '\t' << format_double(v);
    out << '\n';
  }
}

}  // namespace tsgc
