#include "antidote/datasets.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <unordered_map>

#include "antidote/error.hpp"
#include "antidote/random.hpp"

namespace antidote::data {

Dataset make_dataset(Matrix points, std::vector<int> groups, int group_count, std::vector<std::string> names) {
  require(groups.size() == points.rows(), "dataset: group label count differs from row count");
  require(group_count >= 1, "dataset: need at least one group");
  require(numerics::all_finite(points), "dataset: features must be finite");
  require(names.empty() || names.size() == static_cast<std::size_t>(group_count), "dataset: wrong number of group names");
  std::vector<std::size_t> counts(static_cast<std::size_t>(group_count), 0);
  for (int g : groups) {
    require(g >= 0 && g < group_count, "dataset: group label out of range");
    ++counts[static_cast<std::size_t>(g)];
  }
  for (std::size_t j = 0; j < counts.size(); ++j)
    require(counts[j] > 0, "dataset: group " + std::to_string(j) + " has no members");
  return Dataset{std::move(points), std::move(groups), group_count, std::move(names)};
}

GroupIndex group_index(const Dataset& ds) {
  GroupIndex index(static_cast<std::size_t>(ds.group_count));
  for (std::size_t r = 0; r < ds.groups.size(); ++r) index[static_cast<std::size_t>(ds.groups[r])].push_back(r);
  return index;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char ch = line[i];
    if (quoted) {
      if (ch == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field += ch;
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == ',') {
      fields.push_back(std::move(field));
      field.clear();
    } else if (ch != '\r') {
      field += ch;
    }
  }
  fields.push_back(std::move(field));
  return fields;
}

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t");
  return s.substr(first, last - first + 1);
}

bool is_missing(const std::string& s) {
  return s.empty() || s == "?" || s == "NA" || s == "na" || s == "NaN" || s == "nan";
}

}  // namespace

CsvLoad parse_csv(const std::string& text, const std::string& group_column,
                  const std::vector<std::string>& feature_columns, const std::string& source) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) fail(ErrorKind::Parse, source + ": empty file");
  // Strip a UTF-8 byte-order mark.
  if (line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
  std::vector<std::string> header = split_csv_line(line);
  for (auto& h : header) h = trim(h);

  auto column_of = [&](const std::string& name) -> std::size_t {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) fail(ErrorKind::InvalidArgument, source + ": missing column '" + name + "'");
    return static_cast<std::size_t>(it - header.begin());
  };
  const std::size_t group_col = column_of(group_column);
  std::vector<std::string> names = feature_columns;
  if (names.empty()) {
    for (std::size_t c = 0; c < header.size(); ++c)
      if (c != group_col) names.push_back(header[c]);
  }
  require(!names.empty(), source + ": no feature columns");
  std::vector<std::size_t> feature_cols;
  for (const auto& name : names) feature_cols.push_back(column_of(name));

  std::vector<double> values;
  std::vector<int> groups;
  std::vector<std::string> group_names;
  std::unordered_map<std::string, int> group_ids;
  std::size_t dropped = 0;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto fields = split_csv_line(line);
    if (fields.size() != header.size())
      fail(ErrorKind::Parse, source + ":" + std::to_string(line_no) + ": expected " + std::to_string(header.size()) +
                                 " fields, found " + std::to_string(fields.size()));
    const std::string label = trim(fields[group_col]);
    bool missing = is_missing(label);
    std::vector<double> row;
    row.reserve(feature_cols.size());
    for (std::size_t c : feature_cols) {
      const std::string cell = trim(fields[c]);
      if (is_missing(cell)) {
        missing = true;
        break;
      }
      std::size_t used = 0;
      double v = 0.0;
      try {
        v = std::stod(cell, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used != cell.size() || !std::isfinite(v))
        fail(ErrorKind::Parse, source + ":" + std::to_string(line_no) + ": column '" + header[c] +
                                   "' is not numeric ('" + cell + "')");
      row.push_back(v);
    }
    if (missing) {
      ++dropped;
      continue;
    }
    auto [it, inserted] = group_ids.try_emplace(label, static_cast<int>(group_names.size()));
    if (inserted) group_names.push_back(label);
    groups.push_back(it->second);
    values.insert(values.end(), row.begin(), row.end());
  }
  if (groups.empty()) fail(ErrorKind::InvalidArgument, source + ": no rows left after dropping missing values");
  if (group_names.size() < 2)
    fail(ErrorKind::InvalidArgument, source + ": group column '" + group_column + "' has fewer than 2 distinct values");

  const std::size_t n = groups.size();
  const int g = static_cast<int>(group_names.size());
  CsvLoad out{make_dataset(Matrix(n, feature_cols.size(), std::move(values)), std::move(groups), g, std::move(group_names)),
              dropped, names};
  return out;
}

CsvLoad load_csv(const std::string& path, const std::string& group_column,
                 const std::vector<std::string>& feature_columns) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::Io, "cannot open dataset file '" + path + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_csv(buffer.str(), group_column, feature_columns, path);
}

Dataset standardize(const Dataset& ds) {
  const std::size_t n = ds.size();
  require(n >= 2, "standardize: need at least 2 rows");
  Dataset out = ds;
  for (std::size_t c = 0; c < ds.dims(); ++c) {
    double mean = 0.0;
    for (std::size_t r = 0; r < n; ++r) mean += ds.points(r, c);
    mean /= static_cast<double>(n);
    double ss = 0.0;
    for (std::size_t r = 0; r < n; ++r) {
      const double d = ds.points(r, c) - mean;
      ss += d * d;
    }
    const double sd = std::sqrt(ss / static_cast<double>(n - 1));
    for (std::size_t r = 0; r < n; ++r) {
      // Relative cutoff: a column that is constant up to rounding counts as constant.
      out.points(r, c) = sd > 1e-14 * std::max(1.0, std::abs(mean)) ? (ds.points(r, c) - mean) / sd : 0.0;
    }
  }
  return out;
}

Dataset subsample(const Dataset& ds, std::size_t m, std::uint64_t seed, int max_attempts) {
  const std::size_t n = ds.size();
  require(m <= n, "subsample: m (" + std::to_string(m) + ") exceeds dataset size (" + std::to_string(n) + ")");
  if (m == n) return ds;
  Rng rng(seed);
  std::vector<std::size_t> perm(n);
  for (int attempt = 0; attempt < max_attempts; ++attempt) {
    std::iota(perm.begin(), perm.end(), 0);
    // Partial Fisher-Yates: the first m slots are a uniform sample.
    for (std::size_t i = 0; i < m; ++i) std::swap(perm[i], perm[i + rng.below(n - i)]);
    std::vector<std::size_t> picked(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(m));
    std::sort(picked.begin(), picked.end());
    std::vector<bool> seen(static_cast<std::size_t>(ds.group_count), false);
    for (std::size_t r : picked) seen[static_cast<std::size_t>(ds.groups[r])] = true;
    if (std::all_of(seen.begin(), seen.end(), [](bool b) { return b; })) {
      std::vector<int> groups;
      groups.reserve(m);
      for (std::size_t r : picked) groups.push_back(ds.groups[r]);
      return make_dataset(ds.points.select_rows(picked), std::move(groups), ds.group_count, ds.group_names);
    }
  }
  fail(ErrorKind::InvalidArgument, "subsample: could not keep all " + std::to_string(ds.group_count) + " groups in " +
                                       std::to_string(m) + " rows after " + std::to_string(max_attempts) + " attempts");
}

namespace {

// Splits `total` into integer parts proportional to `shares` (largest remainder).
std::vector<std::size_t> apportion(std::size_t total, const std::vector<double>& shares) {
  std::vector<std::size_t> parts(shares.size());
  std::vector<std::pair<double, std::size_t>> remainders;
  std::size_t used = 0;
  for (std::size_t i = 0; i < shares.size(); ++i) {
    const double exact = shares[i] * static_cast<double>(total);
    parts[i] = static_cast<std::size_t>(std::floor(exact + 1e-9));
    used += parts[i];
    remainders.emplace_back(exact - static_cast<double>(parts[i]), i);
  }
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t i = 0; used < total; ++i, ++used) ++parts[remainders[i % remainders.size()].second];
  return parts;
}

struct BlobLayout {
  std::vector<std::size_t> blob_of_row;
  std::vector<int> group_of_row;
};

BlobLayout blob_layout(const BlobSpec& spec) {
  BlobLayout layout;
  const auto g = static_cast<std::size_t>(spec.groups);
  for (std::size_t b = 0; b < spec.blobs; ++b) {
    const std::size_t size = spec.n / spec.blobs + (b < spec.n % spec.blobs ? 1 : 0);
    std::vector<double> shares(g, (1.0 - spec.skew) / static_cast<double>(g));
    shares[b % g] = 1.0 / static_cast<double>(g) + spec.skew * (1.0 - 1.0 / static_cast<double>(g));
    const auto counts = apportion(size, shares);
    for (std::size_t j = 0; j < g; ++j)
      for (std::size_t c = 0; c < counts[j]; ++c) {
        layout.blob_of_row.push_back(b);
        layout.group_of_row.push_back(static_cast<int>(j));
      }
  }
  return layout;
}

}  // namespace

Dataset make_skewed_blobs(const BlobSpec& spec) {
  require(spec.groups >= 2, "make_skewed_blobs: need at least 2 groups");
  require(spec.skew >= 0.0 && spec.skew <= 1.0, "make_skewed_blobs: skew must lie in [0, 1]");
  require(spec.blobs >= 1 && spec.n >= spec.blobs, "make_skewed_blobs: need at least one point per blob");
  require(spec.dims >= 1, "make_skewed_blobs: need at least one dimension");
  const BlobLayout layout = blob_layout(spec);

  // Blob centers: on a line in 1-D, otherwise evenly spaced on a circle in the first two axes
  // with neighbouring centers `separation` apart.
  Matrix centers(spec.blobs, spec.dims);
  constexpr double kPi = 3.14159265358979323846;
  for (std::size_t b = 0; b < spec.blobs; ++b) {
    if (spec.dims == 1 || spec.blobs <= 2) {
      centers(b, 0) = spec.separation * static_cast<double>(b);
    } else {
      const double radius = spec.separation / (2.0 * std::sin(kPi / static_cast<double>(spec.blobs)));
      const double angle = 2.0 * kPi * static_cast<double>(b) / static_cast<double>(spec.blobs);
      centers(b, 0) = radius * std::cos(angle);
      centers(b, 1) = radius * std::sin(angle);
    }
  }

  Rng rng(spec.seed);
  const std::size_t n = layout.blob_of_row.size();
  Matrix points(n, spec.dims);
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < spec.dims; ++c) points(r, c) = centers(layout.blob_of_row[r], c) + rng.normal();

  std::vector<std::string> names;
  for (int j = 0; j < spec.groups; ++j) names.push_back("g" + std::to_string(j));
  return make_dataset(std::move(points), layout.group_of_row, spec.groups, std::move(names));
}

std::vector<int> skewed_blob_labels(const BlobSpec& spec) {
  const BlobLayout layout = blob_layout(spec);
  return {layout.blob_of_row.begin(), layout.blob_of_row.end()};
}

Dataset make_line_fixture(const LineSpec& spec) {
  require(spec.first_group >= 1 && spec.first_group < spec.n, "line fixture: both groups need at least one point");
  require(spec.spacing > 0.0, "line fixture: spacing must be positive");
  Matrix points(spec.n, 1);
  std::vector<int> groups(spec.n);
  for (std::size_t i = 0; i < spec.n; ++i) {
    points(i, 0) = spec.spacing * static_cast<double>(i);
    groups[i] = i < spec.first_group ? 0 : 1;
  }
  return make_dataset(std::move(points), std::move(groups), 2);
}

namespace {

std::string csv_field(const std::string& value) {
  if (value.find_first_of(",\"\r\n") == std::string::npos) return value;
  std::string quoted = "\"";
  for (char ch : value) {
    if (ch == '"') quoted += '"';
    quoted += ch;
  }
  return quoted + '"';
}

}  // namespace

std::string to_csv(const Dataset& ds, const std::vector<int>& labels, const std::string& label_column) {
  require(labels.empty() || labels.size() == ds.size(), "to_csv: one label per row required");
  std::ostringstream out;
  out.precision(17);
  for (std::size_t c = 0; c < ds.dims(); ++c) out << 'x' << c << ',';
  out << "group";
  if (!labels.empty()) out << ',' << csv_field(label_column);
  out << '\n';
  for (std::size_t r = 0; r < ds.size(); ++r) {
    for (std::size_t c = 0; c < ds.dims(); ++c) out << ds.points(r, c) << ',';
    const int g = ds.groups[r];
    if (ds.group_names.empty())
      out << 'g' << g;
    else
      out << csv_field(ds.group_names[static_cast<std::size_t>(g)]);
    if (!labels.empty()) out << ',' << labels[r];
    out << '\n';
  }
  return out.str();
}

}  // namespace antidote::data
