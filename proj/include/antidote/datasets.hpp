#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "antidote/numerics.hpp"

namespace antidote::data {

using numerics::Matrix;

/// Points plus one protected-group label per row.
struct Dataset {
  Matrix points;
  std::vector<int> groups;  // each in [0, group_count)
  int group_count = 0;
  std::vector<std::string> group_names;  // optional; empty or group_count entries

  std::size_t size() const noexcept { return points.rows(); }
  std::size_t dims() const noexcept { return points.cols(); }
};

/// Builds a Dataset and checks its invariants (every group nonempty, finite features).
Dataset make_dataset(Matrix points, std::vector<int> groups, int group_count, std::vector<std::string> names = {});

/// Row indices of each protected group; the lists partition [0, n).
using GroupIndex = std::vector<std::vector<std::size_t>>;

GroupIndex group_index(const Dataset& ds);

struct CsvLoad {
  Dataset data;
  std::size_t dropped_rows = 0;  // rows discarded for missing values
  std::vector<std::string> feature_names;
};

/// Reads a headered CSV. Groups are encoded in first-appearance order. When `feature_columns` is
/// empty every column other than the group column is used.
CsvLoad load_csv(const std::string& path, const std::string& group_column,
                 const std::vector<std::string>& feature_columns = {});

/// Same as load_csv but from in-memory text; `source` names the input in error messages.
CsvLoad parse_csv(const std::string& text, const std::string& group_column,
                  const std::vector<std::string>& feature_columns, const std::string& source = "<memory>");

/// Splits one RFC-4180 style CSV line (quoted fields, doubled quotes) into fields.
std::vector<std::string> split_csv_line(const std::string& line);

/// Per-feature z-scores using the sample standard deviation; constant features become 0.
Dataset standardize(const Dataset& ds);

/// Uniform sample of m rows without replacement that still contains every group.
Dataset subsample(const Dataset& ds, std::size_t m, std::uint64_t seed, int max_attempts = 100);

struct BlobSpec {
  std::size_t n = 200;
  std::size_t dims = 2;
  int groups = 2;
  double skew = 0.5;
  std::size_t blobs = 2;
  double separation = 3.0;  // distance between neighbouring blob centers, in units of blob sd
  std::uint64_t seed = 0;
};

/// Gaussian blobs whose group mix departs from the global mix by `skew`: in blob b the group
/// b mod g takes share 1/g + skew (1 - 1/g) and every other group (1 - skew)/g.
Dataset make_skewed_blobs(const BlobSpec& spec);

/// Ground-truth blob of every row produced by make_skewed_blobs with the same spec.
std::vector<int> skewed_blob_labels(const BlobSpec& spec);

/// Evenly spaced points on a line; the first `first_group` points form group 0, the rest group 1.
struct LineSpec {
  std::size_t n = 20;
  std::size_t first_group = 8;
  double spacing = 0.25;
};

Dataset make_line_fixture(const LineSpec& spec);

/// Writes points and groups as CSV with header x0..x{d-1},group[,label_column].
std::string to_csv(const Dataset& ds, const std::vector<int>& labels = {}, const std::string& label_column = "label");

}  // namespace antidote::data
