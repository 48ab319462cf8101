#include "dualfl/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "dualfl/rng.hpp"

namespace dualfl {

namespace {

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r\n");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r\n");
  return s.substr(begin, end - begin + 1);
}

int parse_label(const std::string& token, std::size_t line_no) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(token, &used);
  } catch (const std::exception&) {
    throw DataError("line " + std::to_string(line_no) + ": bad label '" + token + "'");
  }
  if (used != token.size() || std::floor(v) != v) {
    throw DataError("line " + std::to_string(line_no) + ": label must be an integer, got '" +
                    token + "'");
  }
  return static_cast<int>(v);
}

double parse_real(const std::string& token, std::size_t line_no) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(token, &used);
  } catch (const std::exception&) {
    throw DataError("line " + std::to_string(line_no) + ": bad value '" + token + "'");
  }
  if (used != token.size() || !std::isfinite(v)) {
    throw DataError("line " + std::to_string(line_no) + ": bad value '" + token + "'");
  }
  return v;
}

Dataset finalize(std::vector<std::vector<double>> rows, std::vector<int> labels,
                 Eigen::Index dim) {
  if (rows.empty()) throw DataError("dataset is empty");
  Dataset data;
  data.features.resize(static_cast<Eigen::Index>(rows.size()), dim);
  data.features.setZero();
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < rows[i].size(); ++j) {
      data.features(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          rows[i][j];
    }
  }
  const int min_label = *std::min_element(labels.begin(), labels.end());
  if (min_label < 0) throw DataError("negative label " + std::to_string(min_label));
  if (min_label == 0) {
    for (int& y : labels) ++y;
    data.labels_shifted = true;
  }
  data.classes = *std::max_element(labels.begin(), labels.end());
  data.labels = std::move(labels);
  return data;
}

Dataset parse_dense_csv(std::istream& in) {
  std::vector<std::vector<double>> rows;
  std::vector<int> labels;
  Eigen::Index dim = -1;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    line = trim(line);
    if (line.empty()) continue;
    std::vector<std::string> tokens;
    std::stringstream ss(line);
    std::string tok;
    while (std::getline(ss, tok, ',')) tokens.push_back(trim(tok));
    if (tokens.size() < 2) {
      throw DataError("line " + std::to_string(line_no) +
                      ": need at least one feature and a label");
    }
    const Eigen::Index row_dim = static_cast<Eigen::Index>(tokens.size()) - 1;
    if (dim < 0) {
      dim = row_dim;
    } else if (dim != row_dim) {
      throw DataError("line " + std::to_string(line_no) + ": expected " +
                      std::to_string(dim) + " features, got " + std::to_string(row_dim));
    }
    std::vector<double> row(static_cast<std::size_t>(row_dim));
    for (Eigen::Index j = 0; j < row_dim; ++j) {
      row[static_cast<std::size_t>(j)] = parse_real(tokens[static_cast<std::size_t>(j)], line_no);
    }
    labels.push_back(parse_label(tokens.back(), line_no));
    rows.push_back(std::move(row));
  }
  return finalize(std::move(rows), std::move(labels), std::max<Eigen::Index>(dim, 0));
}

Dataset parse_sparse_svm(std::istream& in) {
  std::vector<std::vector<double>> rows;
  std::vector<int> labels;
  Eigen::Index dim = 0;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    std::stringstream ss(line);
    std::string tok;
    ss >> tok;
    labels.push_back(parse_label(tok, line_no));
    std::vector<double> row;
    while (ss >> tok) {
      const auto colon = tok.find(':');
      if (colon == std::string::npos) {
        throw DataError("line " + std::to_string(line_no) + ": expected idx:val, got '" +
                        tok + "'");
      }
      int idx = 0;
      try {
        idx = std::stoi(tok.substr(0, colon));
      } catch (const std::exception&) {
        throw DataError("line " + std::to_string(line_no) + ": bad index in '" + tok + "'");
      }
      if (idx < 1) {
        throw DataError("line " + std::to_string(line_no) + ": indices are 1-based");
      }
      const double v = parse_real(tok.substr(colon + 1), line_no);
      if (static_cast<std::size_t>(idx) > row.size()) row.resize(static_cast<std::size_t>(idx), 0.0);
      row[static_cast<std::size_t>(idx - 1)] = v;
      dim = std::max<Eigen::Index>(dim, idx);
    }
    rows.push_back(std::move(row));
  }
  return finalize(std::move(rows), std::move(labels), dim);
}

}  // namespace

Dataset parse_dataset(const std::string& text, DatasetFormat format) {
  std::istringstream in(text);
  return format == DatasetFormat::dense_csv ? parse_dense_csv(in) : parse_sparse_svm(in);
}

Dataset load_dataset(const std::string& path, DatasetFormat format) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open dataset file: " + path);
  return format == DatasetFormat::dense_csv ? parse_dense_csv(in) : parse_sparse_svm(in);
}

void normalize_rows(Dataset& data) {
  for (Eigen::Index i = 0; i < data.features.rows(); ++i) {
    const double norm = data.features.row(i).norm();
    if (norm > 0.0) data.features.row(i) /= norm;
  }
}

std::vector<Shard> partition(const Dataset& data, int clients, PartitionScheme scheme,
                             std::uint64_t seed) {
  const Eigen::Index n = data.samples();
  if (clients < 1) throw ConfigError("partition needs at least one client");
  if (static_cast<Eigen::Index>(clients) > n) {
    throw ConfigError("more clients (" + std::to_string(clients) + ") than samples (" +
                      std::to_string(n) + ")");
  }
  std::vector<std::size_t> order(static_cast<std::size_t>(n));
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  if (scheme == PartitionScheme::shuffled) {
    Rng rng(seed);
    order = rng.permutation(order.size());
  }

  std::vector<Shard> shards;
  shards.reserve(static_cast<std::size_t>(clients));
  const Eigen::Index base = n / clients;
  const Eigen::Index extra = n % clients;
  std::size_t cursor = 0;
  for (int c = 0; c < clients; ++c) {
    const Eigen::Index size = base + (c < extra ? 1 : 0);
    Shard shard;
    shard.features.resize(size, data.feature_dim());
    shard.labels.resize(static_cast<std::size_t>(size));
    for (Eigen::Index i = 0; i < size; ++i) {
      const std::size_t src = order[cursor++];
      shard.features.row(i) = data.features.row(static_cast<Eigen::Index>(src));
      shard.labels[static_cast<std::size_t>(i)] = data.labels[src];
    }
    shards.push_back(std::move(shard));
  }
  return shards;
}

}  // namespace dualfl
