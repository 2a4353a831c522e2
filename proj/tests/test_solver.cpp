#include <gtest/gtest.h>

#include <numeric>

#include "diffecam/shapes.hpp"
#include "diffecam/solver.hpp"

using namespace diffecam;

namespace {

Image2D random_image(Rng& rng, std::size_t r, std::size_t c, double lo = -1.0, double hi = 1.0) {
  Image2D img(r, c);
  for (double& v : img) v = lo + (hi - lo) * rng.uniform();
  return img;
}

Mask random_mask(Rng& rng, std::size_t r, std::size_t c, double rate) {
  Mask m(r, c);
  for (auto& v : m) v = rng.uniform() < rate ? 1 : 0;
  return m;
}

struct Scene {
  GridSpec grid = GridSpec::with_default_padding(16, 16);
  Image2D psf = synthesize_psf(PsfParams{8, 1.0, 0.1, grid});
};

void expect_monotone(const SolveResult& r) {
  for (std::size_t i = 1; i < r.objective_trace.size(); ++i)
    EXPECT_LE(r.objective_trace[i], r.objective_trace[i - 1] + 1e-12) << "at " << i;
}

} // namespace

TEST(SolveConfig, Validation) {
  SolveConfig c;
  EXPECT_NO_THROW(c.validate());
  c.tau = 0.0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = SolveConfig{};
  c.max_iters = 0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = SolveConfig{};
  c.rel_tol = 1.0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = SolveConfig{};
  c.twist_alpha = 2.0;
  EXPECT_THROW(c.validate(), ConfigError);
}

TEST(SolveConfig, DerivedBeta) {
  // alpha = 1.9: rho = sqrt(0.9), xi = ((1 - rho) / (1 + rho))^2, beta = 2 alpha / (1 + xi)
  EXPECT_NEAR(SolveConfig{}.beta(), 3.7973665961010274, 1e-12);
  SolveConfig c;
  c.twist_beta = 1.5;
  EXPECT_EQ(c.beta(), 1.5);
}

TEST(Objective, MatchesIndependentSum) {
  Rng rng(1);
  const std::size_t n = 6;
  const Image2D k = random_image(rng, n, n, 0, 1), x = random_image(rng, n, n),
                y = random_image(rng, n, n);
  const Mask m = random_mask(rng, n, n, 0.6);
  const double tau = 0.37;
  double data = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      if (!m(i, j)) continue;
      double ax = 0.0;
      for (std::size_t a = 0; a < n; ++a)
        for (std::size_t b = 0; b < n; ++b) ax += k(a, b) * x((i + n - a) % n, (j + n - b) % n);
      data += (y(i, j) - ax) * (y(i, j) - ax);
    }
  double tv = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      tv += std::abs(x(i, (j + 1) % n) - x(i, j)) + std::abs(x((i + 1) % n, j) - x(i, j));
  const ConvolutionOperator A(k, m);
  EXPECT_NEAR(objective(x, y, A, tau), data + tau * tv, 1e-10);
  EXPECT_NEAR(objective(Image2D(n, n, 0.0), y, A, tau), norm2(apply_mask(y, m)), 1e-12);
  EXPECT_THROW(objective(Image2D(5, 5), y, A, tau), DimensionError);
}

TEST(Objective, ExactSolutionWithZeroTau) {
  Scene s;
  Rng rng(2);
  const Image2D x = random_image(rng, 32, 32, 0, 1);
  const ConvolutionOperator A(s.psf, full_mask(s.grid));
  EXPECT_NEAR(objective(x, A.apply(x), A, 0.0), 0.0, 1e-20);
}

TEST(Gradient, MatchesCentralDifferences) {
  Rng rng(3);
  for (int n = 0; n < 10; ++n) {
    const ConvolutionOperator A(random_image(rng, 8, 8, 0, 1), random_mask(rng, 8, 8, 0.7));
    const Image2D x = random_image(rng, 8, 8), y = random_image(rng, 8, 8);
    const Image2D g = data_gradient(x, y, A);
    Image2D fd(8, 8);
    for (std::size_t i = 0; i < x.size(); ++i) {
      Image2D xp = x, xm = x;
      xp[i] += 1e-5;
      xm[i] -= 1e-5;
      fd[i] = (data_term(xp, y, A) - data_term(xm, y, A)) / 2e-5;
    }
    EXPECT_LE(std::sqrt(norm2(g - fd) / norm2(fd)), 1e-5);
  }
}

TEST(Operator, AdjointIdentity) {
  Rng rng(4);
  for (int n = 0; n < 10; ++n) {
    const ConvolutionOperator A(random_image(rng, 9, 7, 0, 1), random_mask(rng, 9, 7, 0.5));
    const Image2D x = random_image(rng, 9, 7), y = random_image(rng, 9, 7);
    EXPECT_NEAR(dot(A.apply(x), y), dot(x, A.adjoint(y)), 1e-12);
  }
  EXPECT_THROW(ConvolutionOperator(Image2D(4, 4, 0.0), Mask(4, 4, 1)), NumericalError);
  EXPECT_THROW(ConvolutionOperator(Image2D(4, 4, 1.0), Mask(4, 5, 1)), DimensionError);
}

TEST(SoftThreshold, Shrinks) {
  const Image2D x(1, 5, std::vector<double>{-2, -0.5, 0, 0.5, 2});
  EXPECT_EQ(soft_threshold(x, 1.0), Image2D(1, 5, std::vector<double>{-1, 0, 0, 0, 1}));
}

TEST(Twist, DeltaRecovery) {
  Scene s;
  const ForwardModel model = make_forward_model(s.psf, full_mask(s.grid), s.grid);
  Image2D delta(32, 32, 0.0);
  delta(13, 18) = 1.0;
  SolveConfig cfg;
  cfg.tau = 1e-6;
  cfg.max_iters = 300;
  const SolveResult r = twist_reconstruct(simulate_measurement(delta, model), model, cfg);
  const auto& e = r.estimate;
  const auto peak = std::max_element(e.begin(), e.end()) - e.begin();
  EXPECT_EQ(peak, 13 * 32 + 18);
  EXPECT_GT(dot(e, delta) / std::sqrt(norm2(e) * norm2(delta)), 0.95);
  expect_monotone(r);
}

TEST(Twist, ZeroMeasurementGivesZero) {
  Scene s;
  const ForwardModel model = make_forward_model(s.psf, full_mask(s.grid), s.grid);
  const SolveResult r = twist_reconstruct(Image2D(32, 32, 0.0), model, SolveConfig{});
  for (double v : r.estimate) EXPECT_EQ(v, 0.0);
  EXPECT_TRUE(r.converged);
}

TEST(Twist, DeterministicMonotoneNonnegative) {
  Scene s;
  const ForwardModel model = make_forward_model(s.psf, make_sampling_mask(s.grid, 0.5, 3), s.grid);
  const Image2D y = simulate_measurement(make_builtin_object("letter_T", 16, 16), model);
  SolveConfig cfg;
  cfg.max_iters = 60;
  const SolveResult a = twist_reconstruct(y, model, cfg);
  const SolveResult b = twist_reconstruct(y, model, cfg);
  EXPECT_EQ(a.estimate, b.estimate);
  EXPECT_EQ(a.objective_trace, b.objective_trace);
  EXPECT_EQ(a.objective_trace.size(), a.iterations + 1);
  EXPECT_GE(min_value(a.estimate), 0.0);
  expect_monotone(a);

  cfg.regularizer = Regularizer::l1;
  cfg.nonneg = false;
  expect_monotone(twist_reconstruct(y, model, cfg));
}

TEST(Twist, UnsampledPixelsAreIgnored) {
  Scene s;
  const ForwardModel model = make_forward_model(s.psf, make_sampling_mask(s.grid, 0.4, 4), s.grid);
  Image2D y = simulate_measurement(make_builtin_object("up_arrow", 16, 16), model);
  SolveConfig cfg;
  cfg.max_iters = 30;
  const SolveResult a = twist_reconstruct(y, model, cfg);
  Rng rng(5);
  for (std::size_t i = 0; i < y.size(); ++i)
    if (!model.mask[i]) y[i] = 100.0 * rng.gaussian();
  const SolveResult b = twist_reconstruct(y, model, cfg);
  EXPECT_EQ(a.estimate, b.estimate);
  EXPECT_EQ(a.tau, b.tau);
}

TEST(Twist, TwoPointPeaks) {
  Scene s;
  const ForwardModel model = make_forward_model(s.psf, make_sampling_mask(s.grid, 0.9, 6), s.grid);
  Image2D obj(16, 16, 0.0);
  obj(4, 5) = 1.0;
  obj(11, 10) = 1.0;
  const SolveResult r = reconstruct_object(simulate_measurement(obj, model), model, SolveConfig{});
  const Image2D& e = r.estimate;
  // strongest pixel within each half of the padded grid
  auto peak_in = [&](std::size_t r0, std::size_t r1) {
    std::size_t best = r0 * 32;
    for (std::size_t i = r0 * 32; i < r1 * 32; ++i)
      if (e[i] > e[best]) best = i;
    return std::pair<long, long>(best / 32, best % 32);
  };
  const auto p1 = peak_in(0, 16), p2 = peak_in(16, 32);
  // padded offset 8
  EXPECT_LE(std::abs(p1.first - 12), 1);
  EXPECT_LE(std::abs(p1.second - 13), 1);
  EXPECT_LE(std::abs(p2.first - 19), 1);
  EXPECT_LE(std::abs(p2.second - 18), 1);
}

TEST(Twist, RejectsBadInput) {
  Scene s;
  const ForwardModel model = make_forward_model(s.psf, full_mask(s.grid), s.grid);
  EXPECT_THROW(twist_reconstruct(Image2D(16, 16), model, SolveConfig{}), DimensionError);
  Image2D y(32, 32, 0.0);
  y[5] = std::numeric_limits<double>::infinity();
  EXPECT_THROW(twist_reconstruct(y, model, SolveConfig{}), NumericalError);
}

TEST(MaskedMean, RemovedOverSampledPixelsOnly) {
  const Image2D y(2, 2, std::vector<double>{1, 2, 3, 10});
  const Mask m(2, 2, std::vector<std::uint8_t>{1, 1, 1, 0});
  const Image2D z = remove_masked_mean(y, m);
  EXPECT_EQ(z, Image2D(2, 2, std::vector<double>{-1, 0, 1, 0}));
}

TEST(EdgePath, ZeroMeasurementAndMonotone) {
  Scene s;
  const ForwardModel model = make_forward_model(s.psf, make_sampling_mask(s.grid, 0.7, 7), s.grid);
  SolveConfig cfg;
  cfg.nonneg = false;
  const SolveResult z = reconstruct_edges(Image2D(32, 32, 0.0), model, edge_kernel_default(),
                                          InverseSpec{}, cfg);
  for (double v : z.estimate) EXPECT_EQ(v, 0.0);

  const Image2D y = simulate_measurement(make_builtin_object("three_stripes", 16, 16), model);
  const SolveResult r = reconstruct_edges(y, model, edge_kernel_default(), InverseSpec{}, cfg);
  expect_monotone(r);
  // the measurement's mean level is invisible to a DC-free model
  Image2D shifted = y;
  for (std::size_t i = 0; i < y.size(); ++i)
    if (model.mask[i]) shifted[i] += 0.25;
  const SolveResult r2 =
      reconstruct_edges(shifted, model, edge_kernel_default(), InverseSpec{}, cfg);
  EXPECT_LE(max_abs(r2.estimate - r.estimate), 1e-9 * max_abs(r.estimate));
}
