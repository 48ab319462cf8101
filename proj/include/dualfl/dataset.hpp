#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dualfl/common.hpp"

namespace dualfl {

enum class DatasetFormat { dense_csv, sparse_svm };

struct Dataset {
  Eigen::MatrixXd features;  // one row per sample
  std::vector<int> labels;   // in [1, classes]
  int classes = 0;
  bool labels_shifted = false;  // input labels were 0-based and moved to 1-based

  Eigen::Index samples() const { return features.rows(); }
  Eigen::Index feature_dim() const { return features.cols(); }
};

/// dense_csv: comma-separated, last column the integer label.
/// sparse_svm: "label idx:val idx:val ..." with 1-based indices.
/// Labels may be 0- or 1-based; 0-based inputs are shifted up and flagged.
Dataset load_dataset(const std::string& path, DatasetFormat format);

Dataset parse_dataset(const std::string& text, DatasetFormat format);

/// Scales every feature row to unit Euclidean norm (zero rows untouched).
void normalize_rows(Dataset& data);

enum class PartitionScheme { contiguous, shuffled };

struct Shard {
  Eigen::MatrixXd features;
  std::vector<int> labels;
};

/// Splits into shards whose sizes differ by at most one; the shuffled scheme
/// permutes sample order with the given seed before the contiguous split.
std::vector<Shard> partition(const Dataset& data, int clients, PartitionScheme scheme,
                             std::uint64_t seed);

}  // namespace dualfl
