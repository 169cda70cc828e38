#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>

#include "linprobit/analysis.hpp"
#include "linprobit/errors.hpp"
#include "linprobit/estimators.hpp"
#include "linprobit/linearization.hpp"
#include "linprobit/model.hpp"
#include "linprobit/rng.hpp"

using namespace linprobit;

namespace {

ProbitProblem scalar_problem() {
  return ProbitProblem(Eigen::MatrixXd::Identity(1, 1),
                       Eigen::MatrixXd::Identity(1, 1),
                       Eigen::MatrixXd::Identity(1, 1));
}

ProbitProblem two_measurement_problem() {
  Eigen::MatrixXd d(2, 1);
  d << 1.0, 1.0;
  return ProbitProblem(d, Eigen::MatrixXd::Identity(1, 1),
                       Eigen::MatrixXd::Identity(2, 2));
}

ProbitProblem random_problem(int m, int n, std::uint64_t seed,
                             double sigma_x_sq = 1.0,
                             double sigma_w_sq = 1.0) {
  RandomStream rng(seed);
  return ProbitProblem(generate_design(m, n, rng),
                       sigma_x_sq * Eigen::MatrixXd::Identity(n, n),
                       sigma_w_sq * Eigen::MatrixXd::Identity(m, m));
}

EstimatorInvocation lmmse_invocation(const Linearization& lin) {
  return [lin](const ProbitProblem&, const ObservationVector& obs,
               RandomStream&) { return lmmse_estimate(lin, obs); };
}

}  // namespace

TEST_CASE("lmmse closed-form MSE scalar anchor 1 - 1/pi") {
  const double mse = lmmse_mse_closed_form(linearize(scalar_problem()));
  CHECK(mse == doctest::Approx(1.0 - 1.0 / M_PI).epsilon(1e-10));
  CHECK(mse == doctest::Approx(0.6817).epsilon(1e-4));
}

TEST_CASE("lmmse closed-form MSE two-measurement anchor 1 - 3/(2 pi)") {
  const double mse =
      lmmse_mse_closed_form(linearize(two_measurement_problem()));
  CHECK(mse == doctest::Approx(1.0 - 3.0 / (2.0 * M_PI)).epsilon(1e-10));
  CHECK(mse == doctest::Approx(0.5225).epsilon(1e-4));
}

TEST_CASE("lmmse MSE approaches the prior trace under heavy noise") {
  const ProbitProblem p(Eigen::MatrixXd::Identity(2, 2),
                        Eigen::MatrixXd::Identity(2, 2),
                        1e12 * Eigen::MatrixXd::Identity(2, 2));
  CHECK(lmmse_mse_closed_form(linearize(p)) ==
        doctest::Approx(2.0).epsilon(1e-4));
}

TEST_CASE("ls closed-form MSE scalar anchor pi - 1") {
  const double mse = ls_mse_closed_form(linearize(scalar_problem()));
  CHECK(mse == doctest::Approx(M_PI - 1.0).epsilon(1e-10));
  CHECK(mse == doctest::Approx(2.1416).epsilon(1e-4));
}

TEST_CASE("ls closed-form MSE does not exist for M < N") {
  CHECK_THROWS_AS((void)ls_mse_closed_form(linearize(random_problem(4, 6, 71))),
                  EstimatorUnavailable);
}

TEST_CASE("lmmse MSE never exceeds the LS MSE or the prior trace") {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const int m = (seed % 2 == 0) ? 10 : 50;
    const ProbitProblem p = random_problem(m, 5, 700 + seed, 2.0, 0.5);
    const Linearization lin = linearize(p);
    const double lmmse = lmmse_mse_closed_form(lin);
    const double ls = ls_mse_closed_form(lin);
    CHECK(lmmse <= ls + 1e-9);
    CHECK(lmmse <= p.prior_cov().trace() + 1e-9);
    CHECK(lmmse >= 0.0);
  }
}

TEST_CASE("appending a measurement never raises the lmmse MSE") {
  RandomStream rng(73);
  const Eigen::MatrixXd d = generate_design(12, 4, rng);
  for (int rows = 5; rows < 12; ++rows) {
    const ProbitProblem small(d.topRows(rows),
                              Eigen::MatrixXd::Identity(4, 4),
                              Eigen::MatrixXd::Identity(rows, rows));
    const ProbitProblem big(d.topRows(rows + 1),
                            Eigen::MatrixXd::Identity(4, 4),
                            Eigen::MatrixXd::Identity(rows + 1, rows + 1));
    CHECK(lmmse_mse_closed_form(linearize(big)) <=
          lmmse_mse_closed_form(linearize(small)) + 1e-9);
  }
}

TEST_CASE("empirical_mse of the zero estimator recovers the prior trace") {
  const ProbitProblem p = random_problem(10, 4, 79, 1.5);
  const EstimatorInvocation zero = [](const ProbitProblem& prob,
                                      const ObservationVector&,
                                      RandomStream&) {
    EstimatorReport r;
    r.estimate = Eigen::VectorXd::Zero(prob.n());
    return r;
  };
  const EmpiricalMse res = empirical_mse(p, zero, 4000, 83);
  CHECK(res.trials_used == 4000);
  CHECK(res.failures == 0);
  CHECK(std::abs(res.mean - 6.0) < 4.0 * res.std_error);
}

TEST_CASE("empirical_mse aborts when too many trials fail") {
  const ProbitProblem p = random_problem(6, 2, 89);
  int counter = 0;
  const EstimatorInvocation flaky = [&counter](const ProbitProblem& prob,
                                               const ObservationVector&,
                                               RandomStream&) {
    EstimatorReport r;
    r.estimate = Eigen::VectorXd::Zero(prob.n());
    if (++counter % 5 == 0) r.diagnostics.diverged = true;  // 20% failures
    return r;
  };
  CHECK_THROWS_AS((void)empirical_mse(p, flaky, 200, 97), NumericError);
}

TEST_CASE("paired trials share the instance across estimators") {
  const ProbitProblem p = random_problem(8, 3, 101);
  // Two copies of the same deterministic estimator must see identical draws,
  // so their per-trial squared errors coincide exactly.
  const Linearization lin = linearize(p);
  const std::vector<std::pair<std::uint64_t, EstimatorInvocation>> ests = {
      {kStreamEstimatorBase + 0, lmmse_invocation(lin)},
      {kStreamEstimatorBase + 50, lmmse_invocation(lin)},
  };
  const PairedMseResult res = paired_empirical_mse(p, ests, 50, 103, 0);
  REQUIRE(res.squared_errors.rows() == 50);
  REQUIRE(res.squared_errors.cols() == 2);
  CHECK(res.squared_errors.col(0) == res.squared_errors.col(1));
  CHECK(res.per_estimator[0].mean == res.per_estimator[1].mean);
}

TEST_CASE("paired trials give estimators private streams") {
  const ProbitProblem p = random_problem(8, 3, 101);
  // A stochastic estimator keyed by different stream offsets must draw
  // different randomness while the shared instance stays the same.
  const EstimatorInvocation noisy = [](const ProbitProblem& prob,
                                       const ObservationVector&,
                                       RandomStream& rng) {
    EstimatorReport r;
    r.estimate = Eigen::VectorXd::Zero(prob.n());
    r.estimate[0] = rng.gaussian();
    return r;
  };
  const std::vector<std::pair<std::uint64_t, EstimatorInvocation>> ests = {
      {kStreamEstimatorBase + 0, noisy},
      {kStreamEstimatorBase + 1, noisy},
  };
  const PairedMseResult res = paired_empirical_mse(p, ests, 20, 103, 0);
  CHECK(res.squared_errors.col(0) != res.squared_errors.col(1));
}

TEST_CASE("paired_empirical_mse records failures as NaN") {
  const ProbitProblem p = random_problem(6, 2, 107);
  const EstimatorInvocation failing = [](const ProbitProblem& prob,
                                         const ObservationVector&,
                                         RandomStream&) {
    EstimatorReport r;
    r.estimate = Eigen::VectorXd::Zero(prob.n());
    r.diagnostics.diverged = true;
    return r;
  };
  const Linearization lin = linearize(p);
  const std::vector<std::pair<std::uint64_t, EstimatorInvocation>> ests = {
      {kStreamEstimatorBase + 0, lmmse_invocation(lin)},
      {kStreamEstimatorBase + 1, failing},
  };
  const PairedMseResult res = paired_empirical_mse(p, ests, 10, 109, 0);
  CHECK(res.per_estimator[1].failures == 10);
  CHECK(res.per_estimator[1].trials_used == 0);
  for (int t = 0; t < 10; ++t) {
    CHECK(std::isnan(res.squared_errors(t, 1)));
    CHECK(std::isfinite(res.squared_errors(t, 0)));
  }
}

TEST_CASE("paired results are identical across thread counts") {
  const ProbitProblem p = random_problem(10, 3, 113);
  const Linearization lin = linearize(p);
  const std::vector<std::pair<std::uint64_t, EstimatorInvocation>> ests = {
      {kStreamEstimatorBase + 0, lmmse_invocation(lin)},
  };
  const PairedMseResult serial = paired_empirical_mse(p, ests, 64, 127, 5, 1);
  const PairedMseResult parallel = paired_empirical_mse(p, ests, 64, 127, 5, 4);
  CHECK(serial.squared_errors == parallel.squared_errors);
}

TEST_CASE("paired_difference summarizes matched trials") {
  Eigen::MatrixXd sq(4, 2);
  sq << 1.0, 0.5, 2.0, 1.0, 3.0, 1.5, 4.0, 2.0;
  const PairedDifference d = paired_difference(sq, 0, 1);
  CHECK(d.trials_used == 4);
  CHECK(d.mean == doctest::Approx(1.25).epsilon(1e-12));
  // Differences are 0.5, 1.0, 1.5, 2.0: sample sd sqrt(5/12), se = sd/2.
  CHECK(d.std_error ==
        doctest::Approx(std::sqrt(5.0 / 12.0) / 2.0).epsilon(1e-12));

  Eigen::MatrixXd with_nan = sq;
  with_nan(1, 1) = std::numeric_limits<double>::quiet_NaN();
  const PairedDifference d2 = paired_difference(with_nan, 0, 1);
  CHECK(d2.trials_used == 3);
}

TEST_CASE("snr_sweep emits complete deterministic rows") {
  SyntheticConfig base;
  base.m = 10;
  base.n = 5;
  base.seed = 11;
  const std::vector<double> grid = {-5.0, 5.0};
  const std::vector<EstimatorId> ests = {EstimatorId::LMMSE, EstimatorId::LS,
                                         EstimatorId::MAP};
  const auto rows = snr_sweep(base, grid, ests, 20);
  REQUIRE(rows.size() == 6);

  for (const SweepPoint& r : rows) {
    CHECK(r.m == 10);
    CHECK(r.n == 5);
    if (r.estimator_id == EstimatorId::MAP) {
      CHECK_FALSE(r.mse_closed_form.has_value());
    } else {
      REQUIRE(r.mse_closed_form.has_value());
      CHECK(*r.mse_closed_form >= 0.0);
    }
    REQUIRE(r.mse_empirical_mean.has_value());
    CHECK(*r.mse_empirical_mean >= 0.0);
    CHECK(r.trials_used + r.failures == 20);
  }

  const auto rows2 = snr_sweep(base, grid, ests, 20);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    CHECK(rows[i].mse_empirical_mean == rows2[i].mse_empirical_mean);
    CHECK(rows[i].mse_empirical_std_error == rows2[i].mse_empirical_std_error);
  }
}

TEST_CASE("snr_sweep marks LS absent when M < N") {
  SyntheticConfig base;
  base.m = 4;
  base.n = 8;
  base.seed = 13;
  const auto rows = snr_sweep(base, {0.0}, {EstimatorId::LMMSE, EstimatorId::LS},
                              10);
  REQUIRE(rows.size() == 2);
  for (const SweepPoint& r : rows) {
    if (r.estimator_id == EstimatorId::LS) {
      CHECK_FALSE(r.mse_empirical_mean.has_value());
      CHECK_FALSE(r.mse_closed_form.has_value());
      CHECK(r.trials_used == 0);
    } else {
      CHECK(r.mse_empirical_mean.has_value());
    }
  }
}

TEST_SUITE("mc") {
  TEST_CASE("empirical lmmse MSE matches the closed form on the scalar case") {
    const ProbitProblem p = scalar_problem();
    const Linearization lin = linearize(p);
    const EmpiricalMse res = empirical_mse(p, lmmse_invocation(lin), 10000, 131);
    CHECK(std::abs(res.mean - (1.0 - 1.0 / M_PI)) < 4.0 * res.std_error);
  }

  TEST_CASE("empirical ls MSE matches the closed form on the scalar case") {
    const ProbitProblem p = scalar_problem();
    const Linearization lin = linearize(p);
    const EstimatorInvocation ls = [lin](const ProbitProblem&,
                                         const ObservationVector& obs,
                                         RandomStream&) {
      return ls_estimate(lin, obs);
    };
    const EmpiricalMse res = empirical_mse(p, ls, 10000, 137);
    CHECK(std::abs(res.mean - (M_PI - 1.0)) < 4.0 * res.std_error);
  }
}
