#pragma once

#include <optional>
#include <string>

#include "dualfl/dataset.hpp"
#include "dualfl/oracle.hpp"
#include "dualfl/rng.hpp"

namespace dualfl {

enum class ProblemKind { quadratic, least_squares, elastic_net, logistic };

/// Everything needed to materialize one client family, either synthetically
/// (seeded generators, no downloads) or from a dataset file.
struct ProblemSpec {
  ProblemKind kind = ProblemKind::quadratic;
  int clients = 2;
  std::uint64_t seed = 1;

  // quadratic / least squares
  int dim = 10;
  double kappa = 10.0;      // spectrum spans [mu_target, mu_target * kappa]
  double mu_target = 1.0;   // smallest eigenvalue per client
  double b_scale = 1.0;

  // least squares
  double rank_fraction = 0.5;  // shared row-space fraction of dim
  double solution_norm = 2.0;  // norm of the planted min-norm solution
  double noise = 0.0;
  int rows_per_client = 0;  // 0 -> dim

  // elastic net
  int samples_per_client = 30;
  double l1 = 0.1;
  double ridge = 0.05;

  // logistic (synthetic Gaussian blobs or a dataset file)
  int classes = 3;
  int features = 5;
  int samples = 192;
  double separation = 3.0;
  double spread = 1.0;
  double logistic_ridge = 1e-2;
  bool unit_rows = true;
  std::optional<std::string> data_path;
  DatasetFormat data_format = DatasetFormat::dense_csv;
  PartitionScheme partition_scheme = PartitionScheme::shuffled;
};

std::vector<CompositeOracle> make_family(const ProblemSpec& spec);

/// Random SPD quadratics with the prescribed spectrum per client.
std::vector<CompositeOracle> make_quadratic_family(int clients, int dim, double mu,
                                                   double kappa, double b_scale,
                                                   Rng& rng);

struct LeastSquaresFamily {
  std::vector<CompositeOracle> oracles;
  ParameterPoint min_norm_solution;  // exact when noise == 0
};

/// Rank-deficient least squares with a row space shared across clients, so
/// the pooled problem is genuinely non-strongly-convex.
LeastSquaresFamily make_least_squares_family(int clients, int dim, int rows_per_client,
                                             double rank_fraction, double solution_norm,
                                             double noise, Rng& rng);

std::vector<CompositeOracle> make_elastic_net_family(int clients, int dim,
                                                     int samples_per_client, double l1,
                                                     double ridge, double noise,
                                                     Rng& rng);

/// Separable Gaussian-blob classification data.
Dataset make_blob_dataset(int samples, int features, int classes, double separation,
                          double spread, bool unit_rows, Rng& rng);

std::vector<CompositeOracle> make_logistic_family(const Dataset& data, int clients,
                                                  double ridge, PartitionScheme scheme,
                                                  std::uint64_t seed);

}  // namespace dualfl
