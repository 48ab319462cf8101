#include "dualfl/problems.hpp"

#include <cmath>

namespace dualfl {

std::vector<CompositeOracle> make_quadratic_family(int clients, int dim, double mu,
                                                   double kappa, double b_scale,
                                                   Rng& rng) {
  if (clients < 1 || dim < 1) throw ConfigError("quadratic family: bad sizes");
  if (!(mu > 0.0) || !(kappa >= 1.0)) {
    throw ConfigError("quadratic family needs mu > 0 and kappa >= 1");
  }
  std::vector<CompositeOracle> out;
  out.reserve(static_cast<std::size_t>(clients));
  for (int c = 0; c < clients; ++c) {
    Eigen::VectorXd spectrum(dim);
    if (dim == 1) {
      spectrum(0) = mu;
    } else {
      // log-spaced between mu and mu*kappa, endpoints exact
      const double log_lo = std::log(mu);
      const double log_hi = std::log(mu * kappa);
      for (int i = 0; i < dim; ++i) {
        spectrum(i) = std::exp(log_lo + (log_hi - log_lo) * i / (dim - 1));
      }
      spectrum(0) = mu;
      spectrum(dim - 1) = mu * kappa;
    }
    const Eigen::MatrixXd q = rng.random_orthogonal(dim);
    const Eigen::MatrixXd a = q * spectrum.asDiagonal() * q.transpose();
    const ParameterPoint b = b_scale * rng.normal_vector(dim);
    out.push_back(CompositeOracle::quadratic(a, b));
  }
  return out;
}

LeastSquaresFamily make_least_squares_family(int clients, int dim, int rows_per_client,
                                             double rank_fraction, double solution_norm,
                                             double noise, Rng& rng) {
  if (clients < 1 || dim < 1) throw ConfigError("least squares family: bad sizes");
  if (!(rank_fraction > 0.0 && rank_fraction <= 1.0)) {
    throw ConfigError("least squares family: rank_fraction must lie in (0, 1]");
  }
  const int rank = std::max(1, static_cast<int>(std::lround(rank_fraction * dim)));
  if (rows_per_client <= 0) rows_per_client = dim;

  // Shared row space spanned by the first `rank` columns of a random
  // orthogonal matrix; its complement is flat for every client.
  const Eigen::MatrixXd q = rng.random_orthogonal(dim);
  const Eigen::MatrixXd basis = q.leftCols(rank);

  ParameterPoint planted = basis * rng.normal_vector(rank);
  if (planted.norm() > 0.0) planted *= solution_norm / planted.norm();

  LeastSquaresFamily family;
  family.min_norm_solution = planted;
  family.oracles.reserve(static_cast<std::size_t>(clients));
  for (int c = 0; c < clients; ++c) {
    const Eigen::MatrixXd coeff =
        rng.normal_matrix(rows_per_client, rank) / std::sqrt(double(rows_per_client));
    const Eigen::MatrixXd design = coeff * basis.transpose();
    ParameterPoint target = design * planted;
    if (noise > 0.0) target += noise * rng.normal_vector(rows_per_client);
    family.oracles.push_back(CompositeOracle::least_squares(design, target));
  }
  return family;
}

std::vector<CompositeOracle> make_elastic_net_family(int clients, int dim,
                                                     int samples_per_client, double l1,
                                                     double ridge, double noise,
                                                     Rng& rng) {
  if (clients < 1 || dim < 1 || samples_per_client < 1) {
    throw ConfigError("elastic net family: bad sizes");
  }
  // sparse planted solution shared across clients
  ParameterPoint planted = ParameterPoint::Zero(dim);
  for (int i = 0; i < dim; i += 3) planted[i] = rng.normal();

  std::vector<CompositeOracle> out;
  out.reserve(static_cast<std::size_t>(clients));
  for (int c = 0; c < clients; ++c) {
    const Eigen::MatrixXd design =
        rng.normal_matrix(samples_per_client, dim) / std::sqrt(double(samples_per_client));
    ParameterPoint target = design * planted;
    if (noise > 0.0) target += noise * rng.normal_vector(samples_per_client);
    out.push_back(CompositeOracle::elastic_net(design, target, l1, ridge));
  }
  return out;
}

Dataset make_blob_dataset(int samples, int features, int classes, double separation,
                          double spread, bool unit_rows, Rng& rng) {
  if (samples < classes || classes < 2 || features < 1) {
    throw ConfigError("blob dataset: bad sizes");
  }
  Eigen::MatrixXd centers(classes, features);
  for (int k = 0; k < classes; ++k) {
    ParameterPoint dir = rng.normal_vector(features);
    const double norm = dir.norm();
    centers.row(k) = (norm > 0.0 ? separation / norm : 0.0) * dir.transpose();
  }
  Dataset data;
  data.features.resize(samples, features);
  data.labels.resize(static_cast<std::size_t>(samples));
  data.classes = classes;
  for (int i = 0; i < samples; ++i) {
    const int label = i % classes;  // balanced
    data.features.row(i) =
        centers.row(label) + spread * rng.normal_vector(features).transpose();
    data.labels[static_cast<std::size_t>(i)] = label + 1;
  }
  if (unit_rows) normalize_rows(data);
  return data;
}

std::vector<CompositeOracle> make_logistic_family(const Dataset& data, int clients,
                                                  double ridge, PartitionScheme scheme,
                                                  std::uint64_t seed) {
  const std::vector<Shard> shards = partition(data, clients, scheme, seed);
  std::vector<CompositeOracle> out;
  out.reserve(shards.size());
  for (const auto& shard : shards) {
    out.push_back(
        CompositeOracle::logistic(shard.features, shard.labels, data.classes, ridge));
  }
  return out;
}

std::vector<CompositeOracle> make_family(const ProblemSpec& spec) {
  Rng rng(spec.seed);
  switch (spec.kind) {
    case ProblemKind::quadratic:
      return make_quadratic_family(spec.clients, spec.dim, spec.mu_target, spec.kappa,
                                   spec.b_scale, rng);
    case ProblemKind::least_squares:
      return make_least_squares_family(spec.clients, spec.dim, spec.rows_per_client,
                                       spec.rank_fraction, spec.solution_norm,
                                       spec.noise, rng)
          .oracles;
    case ProblemKind::elastic_net:
      return make_elastic_net_family(spec.clients, spec.dim, spec.samples_per_client,
                                     spec.l1, spec.ridge, spec.noise, rng);
    case ProblemKind::logistic: {
      Dataset data;
      if (spec.data_path) {
        data = load_dataset(*spec.data_path, spec.data_format);
        if (spec.unit_rows) normalize_rows(data);
      } else {
        data = make_blob_dataset(spec.samples, spec.features, spec.classes,
                                 spec.separation, spec.spread, spec.unit_rows, rng);
      }
      return make_logistic_family(data, spec.clients, spec.logistic_ridge,
                                  spec.partition_scheme, spec.seed);
    }
  }
  throw ConfigError("unknown problem kind");
}

}  // namespace dualfl
