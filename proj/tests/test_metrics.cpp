#include <gtest/gtest.h>

#include <sstream>

#include "diffecam/metrics.hpp"
#include "diffecam/random.hpp"

using namespace diffecam;

TEST(Quantize, DegenerateAndTwoValued) {
  for (double v : quantize_8bit(Image2D(3, 3, 4.2))) EXPECT_EQ(v, 0.0);
  const Image2D q = quantize_8bit(Image2D(1, 4, std::vector<double>{-2, 5, 5, -2}));
  EXPECT_EQ(q, Image2D(1, 4, std::vector<double>{0, 255, 255, 0}));
}

TEST(Quantize, RampAndHalfAwayRounding) {
  // 0..510 maps to i / 2; odd i land exactly on .5 and round up
  Image2D ramp(1, 511);
  for (std::size_t i = 0; i < 511; ++i) ramp[i] = static_cast<double>(i);
  const Image2D q = quantize_8bit(ramp);
  for (std::size_t i = 0; i < 511; ++i) EXPECT_EQ(q[i], static_cast<double>((i + 1) / 2)) << i;

  Image2D even(1, 256);
  for (std::size_t i = 0; i < 256; ++i) even[i] = 0.1 * static_cast<double>(i);
  const Image2D qe = quantize_8bit(even);
  for (std::size_t i = 0; i < 256; ++i) EXPECT_EQ(qe[i], static_cast<double>(i));
}

TEST(Quantize, Idempotent) {
  Rng rng(1);
  Image2D x(7, 9);
  for (double& v : x) v = rng.gaussian();
  const Image2D q = quantize_8bit(x);
  EXPECT_EQ(quantize_8bit(q), q);
}

TEST(Mse, ArithmeticAndOracle) {
  EXPECT_EQ(mse(Image2D(4, 4, 10.0), Image2D(4, 4, 26.0)), 256.0);
  Rng rng(2);
  Image2D a(5, 6), b(5, 6);
  for (double& v : a) v = std::round(255 * rng.uniform());
  for (double& v : b) v = std::round(255 * rng.uniform());
  double s = 0.0;
  for (std::size_t r = 0; r < 5; ++r)
    for (std::size_t c = 0; c < 6; ++c) s += (a(r, c) - b(r, c)) * (a(r, c) - b(r, c));
  EXPECT_NEAR(mse(a, b), s / 30.0, 1e-12);
  EXPECT_EQ(mse(a, b), mse(b, a));
  EXPECT_THROW(mse(a, Image2D(6, 5)), DimensionError);
}

TEST(Psnr, KnownValues) {
  EXPECT_NEAR(psnr(Image2D(4, 4, 0.0), Image2D(4, 4, 16.0)), 24.048403955560611, 1e-12);
  EXPECT_EQ(psnr(Image2D(4, 4, 0.0), Image2D(4, 4, 255.0)), 0.0);
  const double same = psnr(Image2D(3, 3, 9.0), Image2D(3, 3, 9.0));
  EXPECT_TRUE(std::isinf(same) && same > 0);
  const Image2D a(2, 2, std::vector<double>{0, 10, 20, 30});
  const Image2D b(2, 2, std::vector<double>{5, 10, 25, 0});
  EXPECT_EQ(psnr(a, b), psnr(b, a));
}

TEST(Entropy, Extremes) {
  EXPECT_EQ(information_entropy(Image2D(4, 4, 1.0)), 0.0);
  Image2D half(2, 4, 0.0);
  for (std::size_t i = 0; i < 4; ++i) half[i] = 3.0;
  EXPECT_EQ(information_entropy(half), 1.0);
  Image2D all(16, 16);
  for (std::size_t i = 0; i < 256; ++i) all[i] = static_cast<double>(i);
  EXPECT_EQ(information_entropy(all), 8.0);
  // four equally likely levels
  Image2D four(2, 2, std::vector<double>{0, 85, 170, 255});
  EXPECT_EQ(information_entropy(four), 2.0);
}

TEST(Entropy, IgnoresGeometryAndIsBounded) {
  Rng rng(3);
  Image2D x(8, 8);
  for (double& v : x) v = rng.uniform();
  Image2D perm(8, 8);
  for (std::size_t i = 0; i < 64; ++i) perm[i] = x[(i * 13) % 64];
  EXPECT_EQ(information_entropy(x), information_entropy(perm));
  EXPECT_GE(information_entropy(x), 0.0);
  EXPECT_LE(information_entropy(x), 8.0);
}

TEST(ReferenceEdge, StepMatchesHandStencil) {
  Image2D step(4, 6, 0.0);
  for (std::size_t r = 0; r < 4; ++r)
    for (std::size_t c = 3; c < 6; ++c) step(r, c) = 1.0;
  // response per row: [1, 0, -1, -1, 0, 1] -> quantized [255, 128, 0, 0, 128, 255]
  const Image2D k = reference_edge(step, edge_kernel_default());
  const double expect[6] = {255, 128, 0, 0, 128, 255};
  for (std::size_t r = 0; r < 4; ++r)
    for (std::size_t c = 0; c < 6; ++c) EXPECT_EQ(k(r, c), expect[c]);
  for (double v : reference_edge(Image2D(5, 5, 2.0), edge_kernel_default())) EXPECT_EQ(v, 0.0);
}

TEST(Report, CsvFormatting) {
  MetricsReport rep;
  rep.records.push_back({"letter_T", Method::diffuser_ecam, 0.2,
                         std::numeric_limits<double>::infinity(), 1.5, 0.0});
  rep.records.push_back({"car", Method::post_processing, 0.9, 24.25, 0.1, 256.0});
  std::ostringstream out;
  rep.write_csv(out);
  EXPECT_EQ(out.str(),
            "object_id,method,sampling_rate,psnr_db,ie_bits,mse\n"
            "letter_T,diffuser_ecam,0.20000000000000001,inf,1.5,0\n"
            "car,post_processing,0.90000000000000002,24.25,0.10000000000000001,256\n");
  EXPECT_EQ(format_real(std::numeric_limits<double>::quiet_NaN()), "nan");
  EXPECT_EQ(std::stod(format_real(0.1 + 0.2)), 0.1 + 0.2);
}
