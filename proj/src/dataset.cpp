#include "bblab/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include "bblab/errors.hpp"

namespace bblab {

namespace {

std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      cells.push_back(trim(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  cells.push_back(trim(cur));
  return cells;
}

bool parse_number(const std::string& cell, double* out) {
  if (cell.empty()) return false;
  char* end = nullptr;
  const double v = std::strtod(cell.c_str(), &end);
  if (end == nullptr || *end != '\0') return false;
  *out = v;
  return true;
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

void LabeledDataset::recompute_ranges() {
  feature_ranges.assign(dim(), {std::numeric_limits<double>::infinity(),
                                -std::numeric_limits<double>::infinity()});
  for (const Signal& r : rows) {
    for (std::size_t i = 0; i < r.dim(); ++i) {
      feature_ranges[i].first = std::min(feature_ranges[i].first, r[i]);
      feature_ranges[i].second = std::max(feature_ranges[i].second, r[i]);
    }
  }
}

LabeledDataset load_csv_dataset(const std::string& path, const std::string& label_column) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open dataset file: " + path);

  std::string line;
  if (!std::getline(in, line)) throw ParseError(path + ": empty file");
  const std::vector<std::string> header = split_line(line);

  int label_idx = -1;
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == label_column) label_idx = static_cast<int>(i);
  }
  if (label_idx < 0) throw Error(path + ": no column named '" + label_column + "'");

  std::vector<std::vector<std::string>> raw;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    std::vector<std::string> cells = split_line(line);
    if (cells.size() != header.size()) {
      throw ParseError(path + ": row " + std::to_string(line_no) + " has " +
                       std::to_string(cells.size()) + " cells, expected " +
                       std::to_string(header.size()));
    }
    raw.push_back(std::move(cells));
  }
  if (raw.empty()) throw Error(path + ": dataset has a header but no rows");

  // Column kinds are decided by the first data row.
  const std::size_t ncol = header.size();
  std::vector<bool> categorical(ncol, false);
  for (std::size_t c = 0; c < ncol; ++c) {
    if (static_cast<int>(c) == label_idx) continue;
    double v;
    categorical[c] = !parse_number(raw[0][c], &v);
  }

  // Category vocabularies, sorted for a stable one-hot layout.
  std::vector<std::vector<std::string>> vocab(ncol);
  for (std::size_t c = 0; c < ncol; ++c) {
    if (!categorical[c]) continue;
    std::set<std::string> seen;
    for (const auto& row : raw) seen.insert(row[c]);
    vocab[c].assign(seen.begin(), seen.end());
  }

  LabeledDataset ds;
  ds.label_name = label_column;
  for (std::size_t c = 0; c < ncol; ++c) {
    if (static_cast<int>(c) == label_idx) continue;
    if (categorical[c]) {
      for (const auto& v : vocab[c]) ds.feature_names.push_back(header[c] + "=" + v);
    } else {
      ds.feature_names.push_back(header[c]);
    }
  }

  std::map<std::string, int> class_ids;
  for (std::size_t r = 0; r < raw.size(); ++r) {
    Signal row;
    row.values.reserve(ds.feature_names.size());
    for (std::size_t c = 0; c < ncol; ++c) {
      if (static_cast<int>(c) == label_idx) continue;
      if (categorical[c]) {
        for (const auto& v : vocab[c]) row.values.push_back(raw[r][c] == v ? 1.0 : 0.0);
      } else {
        double v;
        if (!parse_number(raw[r][c], &v)) {
          throw ParseError(path + ": non-numeric cell at row " + std::to_string(r + 2) +
                           ", column '" + header[c] + "'");
        }
        if (!std::isfinite(v)) {
          throw ParseError(path + ": non-finite value at row " + std::to_string(r + 2) +
                           ", column '" + header[c] + "'");
        }
        row.values.push_back(v);
      }
    }
    const std::string& label = raw[r][label_idx];
    auto it = class_ids.find(label);
    if (it == class_ids.end()) {
      it = class_ids.emplace(label, static_cast<int>(ds.class_names.size())).first;
      ds.class_names.push_back(label);
    }
    ds.rows.push_back(std::move(row));
    ds.labels.push_back(it->second);
  }
  ds.recompute_ranges();
  return ds;
}

void save_csv_dataset(const LabeledDataset& ds, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write dataset file: " + path);
  for (std::size_t i = 0; i < ds.feature_names.size(); ++i) {
    out << ds.feature_names[i] << ",";
  }
  out << ds.label_name << "\n";
  for (std::size_t r = 0; r < ds.size(); ++r) {
    for (double v : ds.rows[r].values) out << format_double(v) << ",";
    out << ds.class_names[ds.labels[r]] << "\n";
  }
  if (!out) throw Error("write failed: " + path);
}

std::pair<LabeledDataset, LabeledDataset> split_dataset(const LabeledDataset& ds,
                                                        double fraction, Rng& rng) {
  if (ds.size() == 0) throw Error("cannot split an empty dataset");
  if (!(fraction > 0.0 && fraction < 1.0)) {
    throw std::invalid_argument("split fraction must be in (0, 1)");
  }
  std::vector<std::size_t> order(ds.size());
  std::iota(order.begin(), order.end(), 0);
  for (std::size_t i = order.size(); i > 1; --i) {
    std::swap(order[i - 1], order[rng.below(i)]);
  }
  const std::size_t n_train =
      static_cast<std::size_t>(std::llround(fraction * static_cast<double>(ds.size())));

  LabeledDataset train, test;
  train.class_names = test.class_names = ds.class_names;
  train.feature_names = test.feature_names = ds.feature_names;
  train.label_name = test.label_name = ds.label_name;
  for (std::size_t i = 0; i < order.size(); ++i) {
    LabeledDataset& part = (i < n_train) ? train : test;
    part.rows.push_back(ds.rows[order[i]]);
    part.labels.push_back(ds.labels[order[i]]);
  }
  train.recompute_ranges();
  test.recompute_ranges();
  return {std::move(train), std::move(test)};
}

}  // namespace bblab
