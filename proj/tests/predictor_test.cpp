#include <cmath>
#include <filesystem>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "rdanon/predictor.hpp"

namespace rdanon {
namespace {

bool all_equal(const Latent& z, double value) {
  for (double v : z.values()) {
    if (v != value) return false;
  }
  return true;
}

const AlphaBarSchedule& default_schedule() {
  static const auto s = build_linear_beta_schedule(1000, 1e-4, 0.02);
  return s;
}

TEST(ZeroPredictor, AlwaysZeroAndShapePreserving) {
  ZeroPredictor p;
  const Latent x = oracle::normal_latent({3, 4, 5}, 9);
  const Latent out = p.predict(x, 17);
  EXPECT_EQ(out.dims(), x.dims());
  for (double v : out.values()) EXPECT_EQ(v, 0.0);
  EXPECT_EQ(p.predict(Latent({3, 4, 5}, 100.0), 17), out);
  EXPECT_TRUE(p.state_independent());
}

TEST(GaussianPrior, UnitPriorCoefficient) {
  // sigma = 1, mu = 0, ab = 0.75 -> a = sqrt(0.25) = 0.5.
  const auto c = gaussian_prior_coefficients(0.0, 1.0, 0.75);
  EXPECT_DOUBLE_EQ(c.gain, 0.5);
  EXPECT_EQ(c.offset, 0.0);

  const AlphaBarSchedule s({0.75});
  const auto p = gaussian_prior_predictor(0.0, 1.0, s);
  const Latent out = p.predict(Latent({1, 1, 3}, 2.0), 1);
  for (double v : out.values()) EXPECT_DOUBLE_EQ(v, 1.0);
}

TEST(GaussianPrior, VanishesAtCleanEndpoint) {
  const auto p = gaussian_prior_predictor(0.3, 0.7, default_schedule());
  EXPECT_TRUE(all_equal(p.predict(Latent({1, 2, 2}, 5.0), 0), 0.0));
  EXPECT_LT(gaussian_prior_coefficients(0.3, 0.7, 1.0 - 1e-12).gain, 1e-5);
  EXPECT_FALSE(p.state_independent());
}

TEST(GaussianPrior, RejectsNonPositiveSigma) {
  EXPECT_THROW(gaussian_prior_predictor(0.0, 0.0, default_schedule()), RangeError);
  EXPECT_THROW(gaussian_prior_predictor(0.0, -1.0, default_schedule()), RangeError);
}

TEST(GaussianPrior, RegressionRecoversCoefficients) {
  const double mu = 0.4, sigma = 0.6;
  const auto p = gaussian_prior_predictor(mu, sigma, default_schedule());
  for (int t : {50, 400, 900}) {
    const double ab = default_schedule().alpha_bar(t);
    const auto fit = oracle::regress_noise_on_noisy(mu, sigma, ab, 200000, 1000 + t);
    const auto& c = p.coefficients(t);
    EXPECT_NEAR(fit.slope, c.gain, 3.0 * fit.slope_se) << "t=" << t;
    EXPECT_NEAR(fit.intercept, c.offset, 3.0 * fit.intercept_se) << "t=" << t;
  }
}

TEST(GaussianPrior, AnalyticCoefficientsMinimizeSampleMse) {
  // Perturbing the analytic slope in either direction increases the
  // empirical squared error against the true noise.
  const double mu = 0.0, sigma = 1.3, ab = 0.4;
  const auto c = gaussian_prior_coefficients(mu, sigma, ab);
  std::mt19937_64 eng(5);
  std::normal_distribution<double> n;
  std::vector<double> xt(100000), eps(100000);
  for (std::size_t i = 0; i < xt.size(); ++i) {
    const double x0 = mu + sigma * n(eng);
    eps[i] = n(eng);
    xt[i] = std::sqrt(ab) * x0 + std::sqrt(1 - ab) * eps[i];
  }
  auto err = [&](double gain) {
    double s = 0.0;
    for (std::size_t i = 0; i < xt.size(); ++i) {
      const double d = gain * xt[i] + c.offset - eps[i];
      s += d * d;
    }
    return s;
  };
  EXPECT_LT(err(c.gain), err(c.gain * 1.05));
  EXPECT_LT(err(c.gain), err(c.gain * 0.95));
}

TEST(AffineTable, ParsesColumnsCommentsAndLabels) {
  const auto p = parse_affine_table("# header\n100 0 0\n\nt=200\ta=0\tc=1  # const\n7 0.5 -2\n");
  ASSERT_EQ(p.rows().size(), 3u);
  EXPECT_TRUE(all_equal(p.predict(Latent({1, 2, 2}, 3.0), 100), 0.0));
  EXPECT_TRUE(all_equal(p.predict(Latent({1, 2, 2}, 3.0), 200), 1.0));
  EXPECT_TRUE(all_equal(p.predict(Latent({1, 2, 2}, 3.0), 7), -0.5));
  EXPECT_THROW(p.predict(Latent({1, 2, 2}), 101), RangeError);
}

TEST(AffineTable, RejectsMalformed) {
  EXPECT_THROW(parse_affine_table("100 0\n"), FormatError);
  EXPECT_THROW(parse_affine_table("100 x 0\n"), FormatError);
  EXPECT_THROW(parse_affine_table("-1 0 0\n"), FormatError);
  EXPECT_THROW(parse_affine_table("1 0 0\n1 0 1\n"), FormatError);
  EXPECT_THROW(parse_affine_table("# nothing\n"), FormatError);
  EXPECT_THROW(parse_affine_table("1 nan 0\n"), FormatError);
}

TEST(AffineTable, GaussianTableRoundTripsBitwise) {
  const auto original = gaussian_prior_predictor(0.1, 0.9, default_schedule());
  const auto path = std::filesystem::temp_directory_path() / "rdanon_affine_roundtrip.txt";
  save_affine_table(original, path);
  const auto loaded = load_affine_table(path);
  std::filesystem::remove(path);
  ASSERT_EQ(loaded.rows(), original.rows());
  const Latent x = oracle::normal_latent({1, 4, 4}, 11);
  for (int t : {0, 1, 500, 1000}) EXPECT_EQ(loaded.predict(x, t), original.predict(x, t));
}

TEST(PredictorSpec, Grammar) {
  EXPECT_TRUE(make_predictor("zero", default_schedule())->state_independent());
  auto g = make_predictor("gaussian:mu=0,sigma=1", default_schedule());
  const auto& affine = dynamic_cast<const AffinePredictor&>(*g);
  EXPECT_EQ(affine.coefficients(10), gaussian_prior_coefficients(0, 1, default_schedule().alpha_bar(10)));
  EXPECT_THROW(make_predictor("gaussian:mu=0", default_schedule()), FormatError);
  EXPECT_THROW(make_predictor("gaussian:mu=0,sigma=x", default_schedule()), FormatError);
  EXPECT_THROW(make_predictor("gaussian:mu=0,sigma=0", default_schedule()), RangeError);
  EXPECT_THROW(make_predictor("unet", default_schedule()), FormatError);
  EXPECT_THROW(make_predictor("file:/nonexistent/table.txt", default_schedule()), FormatError);
}

TEST(Predictors, DeterministicBitwise) {
  const auto p = gaussian_prior_predictor(0.2, 1.1, default_schedule());
  const Latent x = oracle::normal_latent({2, 8, 8}, 21);
  for (int t : {1, 333, 1000}) EXPECT_EQ(p.predict(x, t), p.predict(x, t));
}

} // namespace
} // namespace rdanon
