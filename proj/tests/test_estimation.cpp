#include <gtest/gtest.h>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <Eigen/QR>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <vector>

#include "arxgsd/estimation.hpp"
#include "test_support.hpp"

using namespace arxgsd;
using arxgsd::testing::max_abs_diff;
using arxgsd::testing::prbs1023;
using arxgsd::testing::second_order_system;
using arxgsd::testing::simulate;
using arxgsd::testing::third_order_input_system;

namespace {

Index svd_rank(const Matrix& m) {
  const Vector sv = Eigen::JacobiSVD<Matrix>(m).singularValues();
  Index rank = 0;
  for (Index i = 0; i < sv.size(); ++i)
    if (sv(i) > 1e-10 * sv(0)) ++rank;
  return rank;
}

/// Autocovariance of an AR(2) process from the Yule-Walker equations:
/// g0 + a1 g1 + a2 g2 = s2, g1 + a1 g0 + a2 g1 = 0, g2 + a1 g1 + a2 g0 = 0,
/// then g_l = -a1 g_{l-1} - a2 g_{l-2}.
std::vector<double> yule_walker_ar2(double a1, double a2, double s2, std::size_t max_lag) {
  Eigen::Matrix3d m;
  m << 1.0, a1, a2, a1, 1.0 + a2, 0.0, a2, a1, 1.0;
  const Eigen::Vector3d g = m.fullPivLu().solve(Eigen::Vector3d(s2, 0.0, 0.0));
  std::vector<double> out{g(0), g(1), g(2)};
  for (std::size_t l = 3; l <= max_lag; ++l) out.push_back(-a1 * out[l - 1] - a2 * out[l - 2]);
  out.resize(max_lag + 1);
  return out;
}

IdentificationConfig default_config() { return IdentificationConfig{}; }

std::vector<double> truth_case1() { return stacked_theta(second_order_system(), 2); }
std::vector<double> truth_case2() { return stacked_theta(third_order_input_system(), 3); }

}  // namespace

// ---------------------------------------------------------------------------
// Lagged matrix and covariances
// ---------------------------------------------------------------------------

TEST(LaggedMatrix, HandEnumeratedRows) {
  const DataSet d{{4, 5, 6}, {1, 2, 3}, std::nullopt};
  const LaggedMatrix z = build_lagged_matrix(d, 1);
  Matrix expected(2, 4);
  expected << 2, 1, 5, 4, 3, 2, 6, 5;
  EXPECT_EQ(z.z, expected);
  EXPECT_EQ(z.lag, 1u);
  EXPECT_EQ(z.labels, (std::vector<std::string>{"y[k]", "y[k-1]", "u[k]", "u[k-1]"}));
}

TEST(LaggedMatrix, ShapeArithmetic) {
  const std::vector<double> u = prbs1023();
  const DataSet d = simulate(second_order_system(), u, 0.4, 1);
  const LaggedMatrix z = build_lagged_matrix(d, 5);
  EXPECT_EQ(z.z.rows(), 1018);
  EXPECT_EQ(z.z.cols(), 12);
}

TEST(LaggedMatrix, NoiseFreeStackHasOneRelationAtTrueOrder) {
  const std::vector<double> u = prbs1023();
  const DataSet d = simulate(second_order_system(), u, 0.0, 1);
  EXPECT_EQ(svd_rank(build_lagged_matrix(d, 2).z), 5);
}

TEST(LaggedMatrix, RejectsTooShortData) {
  const DataSet d{{1, 2, 3, 4}, {1, 2, 3, 4}, std::nullopt};
  EXPECT_THROW((void)build_lagged_matrix(d, 4), InputError);
  EXPECT_NO_THROW((void)build_lagged_matrix(d, 3));
  // A covariance pencil needs N > 2(L+1).
  EXPECT_THROW((void)build_pencil(d, NoiseModel{1.0, {1.0, 0.0}}, 1), InputError);
}

TEST(SampleCovariance, SingleRowIsOuterProduct) {
  LaggedMatrix z;
  z.lag = 0;
  z.z = Matrix(1, 3);
  z.z << 1.0, -2.0, 3.0;
  const Matrix s = sample_covariance(z);
  EXPECT_EQ(s, Matrix(z.z.transpose() * z.z));
}

TEST(SampleCovariance, OrthonormalColumnsGiveScaledIdentity) {
  const Matrix x = Matrix::Random(40, 5);
  const Matrix q = Eigen::HouseholderQR<Matrix>(x).householderQ() * Matrix::Identity(40, 5);
  LaggedMatrix z;
  z.z = q;
  const Matrix s = sample_covariance(z);
  EXPECT_LE((s - Matrix::Identity(5, 5) / 40.0).norm(), 1e-15);
}

TEST(SampleCovariance, ExactlySymmetric) {
  const DataSet d = simulate(second_order_system(), prbs1023(), 0.4, 3);
  const Matrix s = sample_covariance(build_lagged_matrix(d, 4));
  EXPECT_EQ(s, s.transpose());
  const Matrix z = build_lagged_matrix(d, 4).z;
  EXPECT_LE((s - z.transpose() * z / static_cast<double>(z.rows())).norm(), 1e-12 * s.norm());
}

TEST(NoiseCovariance, WhiteNoiseAtLagOne) {
  const Matrix m = build_noise_covariance(NoiseModel{1.0, {1.0, 0.0}}, 1);
  Matrix expected = Matrix::Zero(4, 4);
  expected.diagonal() << 1, 1, 0, 0;
  EXPECT_EQ(m, expected);
}

TEST(NoiseCovariance, SecondOrderLayout) {
  const Matrix m = build_noise_covariance(NoiseModel{0.4, {3.0, 2.0, 1.0}}, 2);
  ASSERT_EQ(m.rows(), 6);
  Matrix expected = Matrix::Zero(6, 6);
  expected.topLeftCorner(3, 3) << 3, 2, 1, 2, 3, 2, 1, 2, 3;
  EXPECT_EQ(m, expected);
}

TEST(NoiseCovariance, PsdAndSingular) {
  const std::vector<double> acvf = acvf_from_model(std::vector<double>{-0.4, 0.6}, 0.4, 5);
  const Matrix m = build_noise_covariance(NoiseModel{0.4, acvf}, 5);
  const Eigen::SelfAdjointEigenSolver<Matrix> eig(m);
  EXPECT_GE(eig.eigenvalues().minCoeff(), -1e-12 * m.norm());
  EXPECT_LE(svd_rank(m), 6);
  EXPECT_THROW((void)build_noise_covariance(NoiseModel{0.4, {1.0, 0.1}}, 2), InputError);
}

// ---------------------------------------------------------------------------
// identify_evd
// ---------------------------------------------------------------------------

TEST(IdentifyEvd, IdentityNoiseReducesToSymmetricEvd) {
  const DataSet d = simulate(second_order_system(), prbs1023(), 0.4, 4);
  const Matrix s = sample_covariance(build_lagged_matrix(d, 2));
  const PencilSpectrum g = identify_evd(s, Matrix::Identity(6, 6));
  const linalg::SymmetricEigen e = linalg::symmetric_eig(s);
  ASSERT_EQ(g.values.size(), 6u);
  EXPECT_EQ(g.infinite_count, 0u);
  for (std::size_t i = 0; i < 6; ++i) {
    EXPECT_NEAR(g.values[i], e.values(static_cast<Index>(i)), 1e-10 * s.norm());
    EXPECT_NEAR(std::abs(g.vectors[i].dot(e.vectors.col(static_cast<Index>(i)))), 1.0, 1e-8);
  }
}

TEST(IdentifyEvd, DoublingNoiseHalvesEigenvalues) {
  const DataSet d = simulate(second_order_system(), prbs1023(), 0.4, 5);
  const Matrix s = sample_covariance(build_lagged_matrix(d, 2));
  const PencilSpectrum one = identify_evd(s, Matrix::Identity(6, 6));
  const PencilSpectrum two = identify_evd(s, 2.0 * Matrix::Identity(6, 6));
  for (std::size_t i = 0; i < 6; ++i) EXPECT_NEAR(two.values[i], 0.5 * one.values[i], 1e-12 * s.norm());
}

TEST(IdentifyEvd, MatchesSchurComplementOracle) {
  // With Sigma = blkdiag(T, 0), eliminating the input block leaves the
  // symmetric-definite problem (S_yy - S_yu S_uu^-1 S_uy) w = lambda T w.
  const DataSet d = simulate(second_order_system(), prbs1023(), 0.4, 6);
  const std::size_t lag = 4;
  const Matrix s = sample_covariance(build_lagged_matrix(d, lag));
  const NoiseModel noise{0.4, acvf_from_model(std::vector<double>{-0.4, 0.6}, 0.4, lag)};
  const Matrix sigma = build_noise_covariance(noise, lag);
  const Index w = static_cast<Index>(lag + 1);
  const Matrix syy = s.topLeftCorner(w, w);
  const Matrix syu = s.topRightCorner(w, w);
  const Matrix suu = s.bottomRightCorner(w, w);
  const Matrix schur = syy - syu * suu.ldlt().solve(syu.transpose());
  const Eigen::GeneralizedSelfAdjointEigenSolver<Matrix> oracle(0.5 * (schur + schur.transpose()),
                                                               sigma.topLeftCorner(w, w));

  const PencilSpectrum g = identify_evd(s, sigma);
  EXPECT_EQ(g.infinite_count, lag + 1);
  ASSERT_EQ(g.values.size(), lag + 1);
  for (std::size_t i = 0; i <= lag; ++i)
    EXPECT_NEAR(g.values[i], oracle.eigenvalues()(static_cast<Index>(i)),
                1e-8 * std::max(1.0, std::abs(g.values[i])));
}

TEST(IdentifyEvd, PencilConsistency) {
  const DataSet d = simulate(third_order_input_system(), prbs1023(), 1.5, 7);
  for (std::size_t lag : {3u, 6u}) {
    const Matrix s = sample_covariance(build_lagged_matrix(d, lag));
    const NoiseModel noise{1.5, acvf_from_model(std::vector<double>{-0.3, 0.7}, 1.5, lag)};
    const Matrix sigma = build_noise_covariance(noise, lag);
    const PencilSpectrum g = identify_evd(s, sigma);
    for (std::size_t i = 0; i < g.values.size(); ++i) {
      const Vector& v = g.vectors[i];
      EXPECT_LE((s * v - g.values[i] * sigma * v).norm(), 1e-8 * (s.norm() + std::abs(g.values[i]) * sigma.norm()));
    }
  }
}

TEST(IdentifyEvd, ValuesAscending) {
  const DataSet d = simulate(second_order_system(), prbs1023(), 0.4, 8);
  const Matrix s = sample_covariance(build_lagged_matrix(d, 5));
  const NoiseModel noise{0.4, acvf_from_model(std::vector<double>{-0.4, 0.6}, 0.4, 5)};
  const PencilSpectrum g = identify_evd(s, build_noise_covariance(noise, 5));
  EXPECT_TRUE(std::is_sorted(g.values.begin(), g.values.end()));
  EXPECT_THROW((void)identify_evd(s, Matrix::Identity(3, 3)), InputError);
}

// ---------------------------------------------------------------------------
// extract_theta and residual_variance
// ---------------------------------------------------------------------------

TEST(ExtractTheta, PublishedEigenvector) {
  const std::vector<double> theta = extract_theta(std::vector<double>{0.4256, -0.1703, 0.2554, -0.8513});
  const std::vector<double> expected{1.0, -0.4, 0.6, -2.0};
  EXPECT_LE(max_abs_diff(theta, expected), 1e-3);
}

TEST(ExtractTheta, IdentityWhenLeadingEntryIsOne) {
  const std::vector<double> v{1.0, 0.25, -3.5, 7.0};
  EXPECT_EQ(extract_theta(v), v);
}

TEST(ExtractTheta, SignInvariant) {
  const Vector v = Vector::Random(6);
  EXPECT_LE(max_abs_diff(extract_theta(v), extract_theta(Vector(-v))), 1e-15);
}

TEST(ExtractTheta, DegenerateNormalization) {
  EXPECT_THROW((void)extract_theta(std::vector<double>{1e-12, 1.0, 0.5}), DegenerateNormalizationError);
  EXPECT_THROW((void)extract_theta(std::vector<double>{}), InputError);
}

TEST(ResidualVariance, TrueThetaOnNoiseFreeDataIsZero) {
  const DataSet d = simulate(second_order_system(), prbs1023(), 0.0, 1);
  EXPECT_LE(residual_variance(truth_case1(), d), 1e-20 * mean_square(d.y));
}

TEST(ResidualVariance, RecoversInnovationVariance) {
  const DataSet d = simulate(second_order_system(), prbs1023(), 0.4, 9);
  EXPECT_NEAR(residual_variance(truth_case1(), d), 0.4, 0.05 * 0.4);
}

TEST(Innovations, EquationErrorByHand) {
  // theta = (1, a1, -b0, -b1) with a1 = -0.5, b1 = 2: e[k] = y[k] - 0.5 y[k-1] - 2 u[k-1].
  const DataSet d{{1, 0, 0}, {0, 2, 1}, std::nullopt};
  const std::vector<double> e = innovations({1.0, -0.5, 0.0, -2.0}, d);
  ASSERT_EQ(e.size(), 2u);
  EXPECT_DOUBLE_EQ(e[0], 2.0 - 0.0 - 2.0);
  EXPECT_DOUBLE_EQ(e[1], 1.0 - 1.0 - 0.0);
}

// ---------------------------------------------------------------------------
// acvf_from_model
// ---------------------------------------------------------------------------

TEST(AcvfFromModel, WhiteNoise) {
  const std::vector<double> acvf = acvf_from_model(std::vector<double>{}, 3.0, 4);
  ASSERT_EQ(acvf.size(), 5u);
  EXPECT_NEAR(acvf[0], 3.0, 1e-12);
  for (std::size_t l = 1; l < 5; ++l) EXPECT_NEAR(acvf[l], 0.0, 1e-12);
}

TEST(AcvfFromModel, MatchesYuleWalker) {
  const std::vector<double> acvf = acvf_from_model(std::vector<double>{-0.4, 0.6}, 0.4, 10);
  const std::vector<double> oracle = yule_walker_ar2(-0.4, 0.6, 0.4, 10);
  EXPECT_LE(max_abs_diff(acvf, oracle), 1e-6);
}

TEST(AcvfFromModel, MatchesYuleWalkerForOtherRoots) {
  for (const auto& [a1, a2] : std::vector<std::pair<double, double>>{{-0.3, 0.7}, {0.9, 0.2}, {-1.5, 0.7}}) {
    const std::vector<double> acvf = acvf_from_model(std::vector<double>{a1, a2}, 1.3, 8);
    EXPECT_LE(max_abs_diff(acvf, yule_walker_ar2(a1, a2, 1.3, 8)), 1e-6) << a1 << ", " << a2;
    for (double v : acvf) EXPECT_LE(std::abs(v), acvf[0] + 1e-12);
  }
}

TEST(AcvfFromModel, MatchesMonteCarloSample) {
  Rng rng(77);
  const std::size_t n = 1'000'000;
  std::vector<double> e(n);
  for (double& x : e) x = std::sqrt(0.4) * rng.normal();
  const std::vector<double> v = ar_filter(std::vector<double>{-0.4, 0.6}, e);
  const std::vector<double> sample = sample_acvf(v, 5);
  const std::vector<double> acvf = acvf_from_model(std::vector<double>{-0.4, 0.6}, 0.4, 5);
  for (std::size_t l = 0; l <= 5; ++l) EXPECT_NEAR(sample[l], acvf[l], 0.02 * acvf[0]) << "lag " << l;
}

TEST(AcvfFromModel, Errors) {
  EXPECT_THROW((void)acvf_from_model(std::vector<double>{-2.0}, 1.0, 3), NumericalError);
  EXPECT_THROW((void)acvf_from_model(std::vector<double>{-0.4}, 1.0, 3, 100), ConfigurationError);
  EXPECT_THROW((void)acvf_from_model(std::vector<double>{-0.4}, -1.0, 3), InputError);
}

TEST(AcvfFromModel, GridRefinementIsStable) {
  const std::vector<double> coarse = acvf_from_model(std::vector<double>{-0.3, 0.7}, 1.0, 6, 1024);
  const std::vector<double> fine = acvf_from_model(std::vector<double>{-0.3, 0.7}, 1.0, 6, 16384);
  EXPECT_LE(max_abs_diff(coarse, fine), 1e-9);
}

// ---------------------------------------------------------------------------
// inner_loop
// ---------------------------------------------------------------------------

TEST(InnerLoop, SecondOrderSystemAtHighSnr) {
  const DataSet d = simulate(second_order_system(), prbs1023(), 0.4, 11);
  const InnerLoopResult r = inner_loop(d, 2, default_config());
  ASSERT_EQ(r.theta.size(), 6u);
  EXPECT_TRUE(r.converged);
  EXPECT_FALSE(r.noise_free);
  const std::vector<double> truth = truth_case1();
  for (std::size_t i : {0u, 1u, 2u, 4u}) EXPECT_NEAR(r.theta[i], truth[i], 0.05) << "entry " << i;
  EXPECT_NEAR(r.noise.sigma_e2, 0.4, 0.1);
  EXPECT_EQ(r.noise.acvf.size(), 3u);
  EXPECT_LT(r.trace.back().relative_change, default_config().conv_tol);
  EXPECT_EQ(r.trace.front().relative_change, 0.0);
}

TEST(InnerLoop, NoiseFreeDataConvergesImmediately) {
  const DataSet d = simulate(second_order_system(), prbs1023(), 0.0, 1);
  const InnerLoopResult r = inner_loop(d, 2, default_config());
  EXPECT_TRUE(r.noise_free);
  EXPECT_TRUE(r.converged);
  EXPECT_EQ(r.trace.size(), 1u);
  EXPECT_LE(max_abs_diff(r.theta, truth_case1()), 1e-6);
  EXPECT_LE(r.noise.sigma_e2, 1e-20 * mean_square(d.y));
}

TEST(InnerLoop, ThirdOrderInputSystemContractsToTruth) {
  // The fixed-point map oscillates with alternating sign before settling, so
  // iteration 5 is only within 0.2 of the truth; the converged estimate is
  // within 0.1 on most realizations.
  const std::vector<double> u = prbs1023();
  const double s2 = noise_variance_for_snr(third_order_input_system(), u, 6.0, SnrDefinition::kInnovation);
  const std::vector<double> truth = truth_case2();
  IdentificationConfig c = default_config();
  c.max_inner_iters = 200;
  int settled = 0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const DataSet d = simulate(third_order_input_system(), u, s2, seed);
    const InnerLoopResult r = inner_loop(d, 3, c);
    ASSERT_GE(r.trace.size(), 5u);
    EXPECT_LE(max_abs_diff(r.trace[4].theta, truth), 0.2) << "seed " << seed;
    EXPECT_LT(r.trace[4].relative_change, r.trace[1].relative_change) << "seed " << seed;
    EXPECT_TRUE(r.converged) << "seed " << seed;
    EXPECT_NEAR(r.noise.sigma_e2, s2, 0.15 * s2) << "seed " << seed;
    if (max_abs_diff(r.theta, truth) <= 0.1) ++settled;
  }
  EXPECT_GE(settled, 7);
}

TEST(InnerLoop, ConvergenceFlagMatchesLastChange) {
  const DataSet d = simulate(second_order_system(), prbs1023(), 1.0, 12);
  IdentificationConfig c = default_config();
  c.max_inner_iters = 2;
  const InnerLoopResult capped = inner_loop(d, 2, c);
  EXPECT_EQ(capped.trace.size(), 2u);
  EXPECT_EQ(capped.converged, capped.trace.back().relative_change < c.conv_tol);
  c.max_inner_iters = 50;
  const InnerLoopResult full = inner_loop(d, 2, c);
  EXPECT_EQ(full.converged, full.trace.back().relative_change < c.conv_tol);
}

// ---------------------------------------------------------------------------
// Order determination
// ---------------------------------------------------------------------------

TEST(CountUnity, PublishedEigenvalueLists) {
  std::vector<double> four{4.5536, 1.0688, 1.0493, 0.9988, 0.9689};
  std::vector<double> none{0.3448, 0.2026, 0.1546};
  std::vector<double> one{1.09, 0.29, 0.0068};
  for (auto* v : {&four, &none, &one}) std::sort(v->begin(), v->end());
  EXPECT_EQ(count_unity_eigenvalues(four, 0.15), 4u);
  EXPECT_EQ(count_unity_eigenvalues(none, 0.15), 0u);
  EXPECT_EQ(count_unity_eigenvalues(one, 0.15), 1u);
}

TEST(EstimateOrder, PublishedExamples) {
  EXPECT_EQ(estimate_order(5, 4), 2u);
  EXPECT_EQ(estimate_order(3, 2), 2u);
  EXPECT_EQ(estimate_order(6, 4), 3u);
  EXPECT_EQ(estimate_order(4, 0), 5u);
  EXPECT_THROW((void)estimate_order(3, 5), InputError);
}

TEST(NullityLaw, NoiseFreeCovarianceNullityIsLagMinusOrderPlusOne) {
  const std::vector<double> u = prbs1023();
  const std::vector<std::pair<ArxModel, std::size_t>> systems{{second_order_system(), 2},
                                                              {third_order_input_system(), 3}};
  for (const auto& [model, eta] : systems) {
    const DataSet d = simulate(model, u, 0.0, 1);
    for (std::size_t lag = eta; lag <= eta + 4; ++lag) {
      const Matrix s = sample_covariance(build_lagged_matrix(d, lag));
      const linalg::SymmetricEigen e = linalg::symmetric_eig(s);
      std::size_t nullity = 0;
      for (Index i = 0; i < e.values.size(); ++i)
        if (e.values(i) <= kNullityRatio * s.trace()) ++nullity;
      EXPECT_EQ(nullity, lag - eta + 1) << "eta " << eta << " lag " << lag;
    }
  }
}

TEST(EvaluateGuess, NoiseFreeUsesNullity) {
  const DataSet d = simulate(second_order_system(), prbs1023(), 0.0, 1);
  const GuessDiagnostics g = evaluate_guess(d, 2, default_config());
  EXPECT_EQ(g.l_verify, 5u);
  EXPECT_EQ(g.d_hat, 4u);
  EXPECT_EQ(g.eta_hat, 2u);
  EXPECT_TRUE(g.accepted);
}

TEST(EvaluateGuess, NoisyTrueOrderAccepted) {
  const std::vector<double> u = prbs1023();
  const double s2 = noise_variance_for_snr(second_order_system(), u, 5.0);
  const DataSet d = simulate(second_order_system(), u, s2, 2);
  const GuessDiagnostics g = evaluate_guess(d, 2, default_config());
  EXPECT_EQ(g.d_hat, 4u);
  EXPECT_TRUE(g.accepted);
  EXPECT_EQ(g.infinite_count, 6u);
  EXPECT_TRUE(std::is_sorted(g.eigenvalues.begin(), g.eigenvalues.end()));
}

TEST(EvaluateGuess, UnderParameterizedGuessRejected) {
  const std::vector<double> u = prbs1023();
  const double s2 = noise_variance_for_snr(second_order_system(), u, 5.0);
  const DataSet d = simulate(second_order_system(), u, s2, 2);
  const GuessDiagnostics g = evaluate_guess(d, 1, default_config());
  EXPECT_FALSE(g.accepted);
}

// ---------------------------------------------------------------------------
// Invariance under input scaling
// ---------------------------------------------------------------------------

TEST(InputScaling, NoiseFreeThetaScalesExactly) {
  const std::vector<double> u = prbs1023();
  const DataSet d = simulate(second_order_system(), u, 0.0, 1);
  const double c = 3.7;
  DataSet scaled = d;
  for (double& x : scaled.u) x *= c;
  const InnerLoopResult r1 = inner_loop(d, 2, default_config());
  const InnerLoopResult r2 = inner_loop(scaled, 2, default_config());
  for (std::size_t i = 0; i <= 2; ++i) EXPECT_NEAR(r2.theta[i], r1.theta[i], 1e-8);
  for (std::size_t i = 3; i < 6; ++i) EXPECT_NEAR(r2.theta[i], r1.theta[i] / c, 1e-8);
}

// ---------------------------------------------------------------------------
// prune_structure
// ---------------------------------------------------------------------------

TEST(PruneStructure, PublishedSecondOrderEstimate) {
  const std::vector<double> theta{1, -0.409, 0.611, -0.004, -1.969, 0.007};
  const ArxModel m = prune_structure(theta, std::vector<double>(6, 0.02));
  EXPECT_EQ(m.n_y, 2u);
  EXPECT_EQ(m.n_u, 1u);
  EXPECT_EQ(m.delay, 1u);
  EXPECT_EQ(m.a, (std::vector<double>{-0.409, 0.611}));
  EXPECT_EQ(m.b, (std::vector<double>{1.969}));
}

TEST(PruneStructure, PublishedFinalIterationEstimate) {
  const std::vector<double> theta{1, -0.31, 0.70, -0.01, 0.03, 0.0, 1.19, 1.59};
  const ArxModel m = prune_structure(theta);
  EXPECT_EQ(m.n_y, 2u);
  EXPECT_EQ(m.n_u, 3u);
  EXPECT_EQ(m.delay, 2u);
}

TEST(PruneStructure, KeepsLargestCoefficientWhenAllAreInsignificant) {
  const std::vector<double> theta{1, -0.5, 0.001, 0.001, -0.003, 0.002};
  const ArxModel m = prune_structure(theta, std::vector<double>(6, 1.0));
  EXPECT_EQ(m.n_y, 0u);
  EXPECT_EQ(m.delay, 1u);
  EXPECT_EQ(m.n_u, 1u);
  EXPECT_EQ(m.b, (std::vector<double>{0.003}));
}

TEST(PruneStructure, InteriorCoefficientsKeepTheirEstimates) {
  const std::vector<double> theta{1, -0.3, 0.7, -0.01, 0.0, -1.2, 0.001, -1.6};
  const ArxModel m = prune_structure(theta);
  EXPECT_EQ(m.delay, 1u);
  EXPECT_EQ(m.n_u, 3u);
  EXPECT_EQ(m.b, (std::vector<double>{1.2, -0.001, 1.6}));
  EXPECT_THROW((void)prune_structure(theta, std::vector<double>(3, 0.1)), InputError);
}
