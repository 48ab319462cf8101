#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>

#include "dualfl/baseline.hpp"
#include "dualfl/config.hpp"
#include "dualfl/dataset.hpp"
#include "dualfl/problems.hpp"
#include "dualfl/rate_fit.hpp"
#include "dualfl/reference.hpp"
#include "dualfl/rng.hpp"
#include "dualfl/runner.hpp"
#include "dualfl/trace.hpp"

using namespace dualfl;

namespace {

CompositeOracle weighted_parabola(double weight, double center) {
  Eigen::MatrixXd a(1, 1);
  a << weight;
  ParameterPoint b(1);
  b << weight * center;
  return CompositeOracle::quadratic(a, b, 0.5 * weight * center * center);
}

std::string temp_path(const char* name) {
  return std::string("./") + name;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in);
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

}  // namespace

TEST_CASE("dense csv: last column is the label") {
  const Dataset data = parse_dataset("0.5,1.0,3\n", DatasetFormat::dense_csv);
  CHECK(data.samples() == 1);
  CHECK(data.feature_dim() == 2);
  CHECK(data.labels[0] == 3);
  CHECK(data.classes == 3);
  CHECK_FALSE(data.labels_shifted);
}

TEST_CASE("dense csv: zero-based labels get shifted") {
  const Dataset data =
      parse_dataset("1.0,0\n2.0,1\n3.0,2\n", DatasetFormat::dense_csv);
  CHECK(data.labels_shifted);
  CHECK(data.labels == std::vector<int>{1, 2, 3});
  CHECK(data.classes == 3);
}

TEST_CASE("sparse svm line fills implicit zeros") {
  const Dataset data = parse_dataset("2 1:0.5 4:-1.0\n", DatasetFormat::sparse_svm);
  CHECK(data.feature_dim() == 4);
  CHECK(data.labels[0] == 2);
  CHECK(data.features(0, 0) == doctest::Approx(0.5));
  CHECK(data.features(0, 1) == doctest::Approx(0.0));
  CHECK(data.features(0, 3) == doctest::Approx(-1.0));
}

TEST_CASE("dataset parse errors carry the line number") {
  CHECK_THROWS_AS(parse_dataset("", DatasetFormat::dense_csv), DataError);
  CHECK_THROWS_WITH_AS(parse_dataset("1.0,2.0,1\nbad,line\n", DatasetFormat::dense_csv),
                       doctest::Contains("line 2"), DataError);
  CHECK_THROWS_AS(parse_dataset("1 0:0.5\n", DatasetFormat::sparse_svm), DataError);
  CHECK_THROWS_AS(parse_dataset("1.5,2.0,1.5\n", DatasetFormat::dense_csv), DataError);
  CHECK_THROWS_AS(parse_dataset("1.0,-2\n", DatasetFormat::dense_csv), DataError);
}

TEST_CASE("missing dataset file") {
  CHECK_THROWS_AS(load_dataset("./no_such_file.csv", DatasetFormat::dense_csv),
                  DataError);
}

TEST_CASE("partition sizes differ by at most one") {
  Rng rng(3);
  Dataset data = make_blob_dataset(10, 3, 2, 2.0, 1.0, false, rng);
  const auto shards = partition(data, 3, PartitionScheme::contiguous, 1);
  CHECK(shards[0].features.rows() == 4);
  CHECK(shards[1].features.rows() == 3);
  CHECK(shards[2].features.rows() == 3);

  Dataset eight = make_blob_dataset(8, 3, 2, 2.0, 1.0, false, rng);
  for (const auto& shard : partition(eight, 8, PartitionScheme::contiguous, 1)) {
    CHECK(shard.features.rows() == 1);
  }
  CHECK_THROWS_AS(partition(eight, 9, PartitionScheme::contiguous, 1), ConfigError);
}

TEST_CASE("shuffled partition is reproducible for a fixed seed") {
  Rng rng(5);
  Dataset data = make_blob_dataset(23, 4, 3, 2.0, 1.0, false, rng);
  const auto a = partition(data, 4, PartitionScheme::shuffled, 99);
  const auto b = partition(data, 4, PartitionScheme::shuffled, 99);
  const auto c = partition(data, 4, PartitionScheme::shuffled, 100);
  bool all_equal = true, any_diff_c = false;
  for (std::size_t s = 0; s < a.size(); ++s) {
    all_equal = all_equal && (a[s].features - b[s].features).norm() == 0.0 &&
                a[s].labels == b[s].labels;
    any_diff_c = any_diff_c || (a[s].features - c[s].features).norm() != 0.0;
  }
  CHECK(all_equal);
  CHECK(any_diff_c);
}

TEST_CASE("rate_fit: exact geometric and inverse-square sequences") {
  const std::vector<double> geometric{1.0, 0.5, 0.25, 0.125, 0.0625};
  const RateFit g = rate_fit(geometric, 0, 4);
  CHECK(g.linear_factor == doctest::Approx(0.5).epsilon(1e-12));

  std::vector<double> inv_square(30, 0.0);
  for (std::size_t n = 1; n < inv_square.size(); ++n) {
    inv_square[n] = 7.0 / static_cast<double>(n * n);
  }
  const RateFit s = rate_fit(inv_square, 5, 25);
  CHECK(s.sublinear_sup == doctest::Approx(1.0).epsilon(1e-12));

  CHECK_THROWS_AS(rate_fit({1.0, 0.5, 0.0, 0.1, 0.1}, 0, 4), NumericalError);
  CHECK_THROWS_AS(rate_fit({1.0, 0.5, 0.2}, 0, 2), ConfigError);
}

TEST_CASE("reference solution: weighted centers give the weighted mean") {
  std::vector<CompositeOracle> family;
  family.push_back(weighted_parabola(2.0, 1.0));
  family.push_back(weighted_parabola(1.0, -1.0));
  const ReferencePoint ref = reference_solution(family);
  CHECK(ref.model[0] == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("reference solution: pure parabola has zero energy, flagged absolute") {
  std::vector<CompositeOracle> family;
  family.push_back(weighted_parabola(1.0, 0.0));
  const ReferencePoint ref = reference_solution(family);
  CHECK(ref.model[0] == doctest::Approx(0.0));
  CHECK(ref.energy == doctest::Approx(0.0));
  CHECK(ref.absolute_energy_error);
}

TEST_CASE("reference solution: Newton and the gradient route agree on logistic") {
  Rng rng(7);
  Dataset data = make_blob_dataset(50, 3, 3, 2.5, 1.0, true, rng);
  auto family = make_logistic_family(data, 2, 1e-2, PartitionScheme::contiguous, 1);
  const ReferencePoint newton = reference_solution(family);
  ReferenceOptions fbs_only;
  fbs_only.hessian_budget = 0;  // forces the accelerated-gradient route
  const ReferencePoint accel = reference_solution(family, fbs_only);
  CHECK((newton.model - accel.model).norm() <= 1e-7);
  CHECK(family_residual_norm(family, newton.model) <= 1e-10);
}

TEST_CASE("reference refuses singular pooled quadratics") {
  Rng rng(9);
  auto family = make_least_squares_family(2, 6, 4, 0.5, 2.0, 0.0, rng);
  CHECK_THROWS_AS(reference_solution(family.oracles), NumericalError);
}

TEST_CASE("baseline gd with the optimal fixed step hits the classical rate") {
  Rng rng(11);
  // same curvature on both clients, prescribed kappa = 10
  const Eigen::MatrixXd q = rng.random_orthogonal(6);
  Eigen::VectorXd spectrum(6);
  spectrum << 1.0, 1.8, 3.2, 5.6, 8.0, 10.0;
  const Eigen::MatrixXd a = q * spectrum.asDiagonal() * q.transpose();
  std::vector<CompositeOracle> family;
  family.push_back(CompositeOracle::quadratic(a, rng.normal_vector(6)));
  family.push_back(CompositeOracle::quadratic(a, rng.normal_vector(6)));
  const ReferencePoint ref = reference_solution(family);

  BaselineConfig cfg;
  cfg.kind = BaselineKind::gd;
  cfg.rounds = 60;
  cfg.step = BaselineStep::optimal;
  const BaselineResult result = run_baseline(family, cfg, &ref);

  std::vector<double> errors;
  errors.push_back(std::numeric_limits<double>::quiet_NaN());  // round 0 unused
  for (const auto& rec : result.records) {
    errors.push_back(std::sqrt(rec.sq_param_err));
  }
  const RateFit fit = rate_fit(errors, 20, 55);
  CHECK(std::abs(fit.linear_factor - 9.0 / 11.0) <= 0.05);
}

TEST_CASE("fedavg with one local step equals gradient descent at the same step") {
  Rng rng(13);
  auto family = make_quadratic_family(3, 4, 0.5, 8.0, 1.0, rng);
  const ReferencePoint ref = reference_solution(family);
  BaselineConfig gd;
  gd.kind = BaselineKind::gd;
  gd.rounds = 30;
  gd.step = BaselineStep::fixed;
  gd.step_size = 0.1;
  BaselineConfig fedavg = gd;
  fedavg.kind = BaselineKind::fedavg;
  fedavg.local_steps = 1;
  const BaselineResult a = run_baseline(family, gd, &ref);
  const BaselineResult b = run_baseline(family, fedavg, &ref);
  CHECK((a.model - b.model).norm() <= 1e-12);
  for (std::size_t i = 0; i < a.records.size(); ++i) {
    CHECK(std::abs(a.records[i].sq_param_err - b.records[i].sq_param_err) <= 1e-12);
  }
}

TEST_CASE("fedavg drifts on heterogeneous clients where the engine converges") {
  std::vector<CompositeOracle> family;
  family.push_back(weighted_parabola(2.0, 1.0));
  family.push_back(weighted_parabola(1.0, -1.0));
  const ReferencePoint ref = reference_solution(family);  // 1/3

  BaselineConfig cfg;
  cfg.kind = BaselineKind::fedavg;
  cfg.rounds = 80;
  cfg.local_steps = 50;
  const BaselineResult drifted = run_baseline(family, cfg, &ref);
  // stalls near the unweighted center mean (0), far from 1/3
  CHECK(drifted.records.back().sq_param_err >= 0.05);

  EngineConfig ec;
  ec.nu = 1.0;  // family mu = min(2, 1)
  ec.rho = 0.5;
  ec.stop.kind = StopKind::exact;
  RunControls controls;
  controls.rounds = 80;
  const RunResult engine_run = run(family, ec, controls, &ref);
  CHECK(engine_run.records.back().sq_param_err <= 1e-10);
}

TEST_CASE("choose_alpha: planted solution norm 2 maps epsilon 0.4 to alpha 0.1") {
  Rng rng(17);
  auto family = make_least_squares_family(3, 10, 8, 0.5, 2.0, 0.0, rng);
  const AlphaChoice choice = choose_alpha(family.oracles, 0.4, 1e-2);
  CHECK(choice.r0_hat == doctest::Approx(2.0).epsilon(0.02));
  CHECK(choice.alpha == doctest::Approx(0.1).epsilon(0.03));
  CHECK(choice.nu == choice.alpha);
  const FamilyConstants fc = family_constants(family.oracles);
  CHECK(choice.rho ==
        doctest::Approx(choice.alpha / (*fc.smoothness + choice.alpha)).epsilon(1e-12));

  // halving epsilon halves alpha, same probe solve
  const AlphaChoice half = choose_alpha(family.oracles, 0.2, 1e-2);
  CHECK(half.alpha == doctest::Approx(0.5 * choice.alpha).epsilon(1e-12));

  // strongly convex input stays valid
  Rng rng2(18);
  auto strong = make_quadratic_family(2, 4, 0.5, 5.0, 1.0, rng2);
  CHECK_NOTHROW(choose_alpha(strong, 0.1, 1e-2));
  CHECK_THROWS_AS(choose_alpha(strong, -1.0, 1e-2), ConfigError);
}

TEST_CASE("config parser: dotted keys, comments, and strict unknown-key check") {
  const std::string text =
      "# a comment line\n"
      "problem.kind = quadratic   # trailing comment\n"
      "problem.clients = 4\n"
      "dualfl.rho = 0.01\n"
      "run.rounds = 7\n";
  const RunConfig cfg = parse_run_config(text);
  CHECK(cfg.problem.kind == ProblemKind::quadratic);
  CHECK(cfg.problem.clients == 4);
  CHECK(cfg.rho.kind == RhoSpec::Kind::value);
  CHECK(cfg.rho.value == doctest::Approx(0.01));
  CHECK(cfg.rounds == 7);

  CHECK_THROWS_WITH_AS(parse_run_config("problem.kidn = quadratic\n"),
                       doctest::Contains("unknown config keys"), ConfigError);
  CHECK_THROWS_AS(parse_run_config("run.rounds = 5\nrun.rounds = 6\n"), ConfigError);
  CHECK_THROWS_AS(parse_run_config("run.rounds\n"), ConfigError);
  CHECK_THROWS_AS(parse_run_config("run.rounds = abc\n"), ConfigError);
  CHECK_THROWS_AS(parse_run_config("run.mode = nonsense\n"), ConfigError);
  // symbolic hyperparameters
  const RunConfig sym = parse_run_config("dualfl.nu = mu\ndualfl.rho = inv_kappa\n");
  CHECK_FALSE(sym.nu.has_value());
  CHECK(sym.rho.kind == RhoSpec::Kind::inv_kappa);
}

TEST_CASE("trace rendering: schema, zero rounds, 17-digit reals") {
  RunTrace empty;
  empty.header.push_back("mode = dualfl");
  const std::string text = render_trace(empty);
  CHECK(text == std::string("# mode = dualfl\n") + kTraceColumns + "\n");

  RunTrace one;
  RoundRecord row;
  row.round = 1;
  row.beta = 1.0 / 3.0;
  row.zeta_sum_norm = 0.0;
  row.total_local_iters = 2;
  one.rows.push_back(row);
  const std::string rendered = render_trace(one);
  CHECK(rendered.find("0.33333333333333331") != std::string::npos);
  CHECK(rendered.find("nan") != std::string::npos);  // no reference columns
}

TEST_CASE("toy pair trace: zero energy error already at round one") {
  std::vector<CompositeOracle> family;
  family.push_back(weighted_parabola(1.0, 1.0));
  family.push_back(weighted_parabola(1.0, -1.0));
  const ReferencePoint ref = reference_solution(family);
  EngineConfig ec;
  ec.nu = 1.0;
  ec.rho = 0.0;
  ec.stop.kind = StopKind::exact;
  RunControls controls;
  controls.rounds = 1;
  const RunResult result = run(family, ec, controls, &ref);
  CHECK(result.records[0].round == 1);
  CHECK(result.records[0].energy_err_rel == doctest::Approx(0.0).epsilon(1e-14));
}

TEST_CASE("runner: engine run from a config string, byte-identical reruns") {
  const std::string text =
      "run.mode = dualfl\n"
      "problem.kind = quadratic\n"
      "problem.clients = 4\n"
      "problem.dim = 6\n"
      "problem.kappa = 20\n"
      "problem.mu = 0.5\n"
      "dualfl.nu = mu\n"
      "dualfl.rho = inv_kappa\n"
      "local.stop = exact\n"
      "run.rounds = 40\n"
      "run.seed = 123\n";
  RunConfig cfg = parse_run_config(text);
  const RunOutcome a = execute(cfg);
  const RunOutcome b = execute(cfg);
  REQUIRE(a.traces.size() == 1);
  CHECK(a.exit_code == 0);
  const std::string ra = render_trace(a.traces[0].second);
  const std::string rb = render_trace(b.traces[0].second);
  CHECK(ra == rb);

  cfg.threads = 4;
  const RunOutcome c = execute(cfg);
  CHECK(render_trace(c.traces[0].second) == ra);

  // emitted files byte-compare too
  const std::string p1 = temp_path("trace_a.csv"), p2 = temp_path("trace_b.csv");
  emit_trace(a.traces[0].second, p1);
  emit_trace(c.traces[0].second, p2);
  CHECK(slurp(p1) == slurp(p2));
  std::remove(p1.c_str());
  std::remove(p2.c_str());

  // different seed, different trace
  cfg.seed = 124;
  cfg.problem.seed = 124;
  const RunOutcome d = execute(cfg);
  CHECK(render_trace(d.traces[0].second) != ra);
}

TEST_CASE("runner: verify_duality mode reports a tiny deviation on quadratics") {
  const std::string text =
      "run.mode = verify_duality\n"
      "problem.kind = quadratic\n"
      "problem.clients = 4\n"
      "problem.dim = 10\n"
      "problem.kappa = 50\n"
      "problem.mu = 0.3\n"
      "dualfl.nu = mu\n"
      "dualfl.rho = inv_kappa\n"
      "duality.rounds = 50\n"
      "duality.tol = 1e-8\n"
      "run.seed = 7\n";
  const RunOutcome outcome = execute(parse_run_config(text));
  CHECK(outcome.exit_code == 0);
  CHECK(std::stod(outcome.message) <= 1e-8);
}

TEST_CASE("runner: unmet target yields exit code 1") {
  const std::string text =
      "run.mode = dualfl\n"
      "problem.kind = quadratic\n"
      "problem.clients = 2\n"
      "problem.dim = 4\n"
      "problem.kappa = 50\n"
      "local.stop = exact\n"
      "run.rounds = 2\n"
      "run.target_sq_err = 1e-30\n";
  const RunOutcome outcome = execute(parse_run_config(text));
  CHECK(outcome.exit_code == 1);
}

TEST_CASE("runner: substitution note appears for numeric families at nu = mu") {
  const std::string text =
      "run.mode = dualfl\n"
      "problem.kind = elastic_net\n"
      "problem.clients = 2\n"
      "problem.dim = 6\n"
      "problem.samples_per_client = 12\n"
      "problem.l1 = 0.2\n"
      "problem.ridge = 0.05\n"
      "problem.noise = 0.1\n"
      "dualfl.nu = mu\n"
      "local.stop = gap_nonsmooth\n"
      "dualfl.gamma = 1.0\n"
      "run.rounds = 3\n"
      "reference.kind = none\n";
  const RunOutcome outcome = execute(parse_run_config(text));
  bool found = false;
  for (const auto& line : outcome.traces[0].second.header) {
    found = found || line.find("substitution") != std::string::npos;
  }
  CHECK(found);
}

TEST_CASE("runner: sweep mode produces one trace per rho") {
  const std::string text =
      "run.mode = sweep_rho\n"
      "problem.kind = quadratic\n"
      "problem.clients = 2\n"
      "problem.dim = 4\n"
      "problem.kappa = 10\n"
      "local.stop = exact\n"
      "run.rounds = 10\n"
      "sweep.rho_values = 0, 0.05, 0.1\n";
  const RunOutcome outcome = execute(parse_run_config(text));
  CHECK(outcome.traces.size() == 3);
  CHECK(outcome.traces[0].first == "_rho0");
  CHECK(outcome.traces[2].first == "_rho2");
}
