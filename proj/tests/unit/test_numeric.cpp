#include "../oracles.hpp"

#include <deflab/numeric.hpp>

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <vector>

using namespace deflab;

TEST(LogSumExp, EmptyIsNegInf)
{
  LogSumExp acc;
  EXPECT_EQ(acc.value(), kNegInf);
  acc.add(kNegInf);
  EXPECT_EQ(acc.value(), kNegInf);
}

TEST(LogSumExp, MatchesDirectSum)
{
  const std::vector<double> v{ -1.0, 0.5, -3.25, 2.0, 1.0 };
  double direct = 0.0;
  for (double x : v)
    direct += std::exp(x);
  EXPECT_NEAR(log_sum_exp(v), std::log(direct), 1e-15);
}

TEST(LogSumExp, NoOverflowOrUnderflow)
{
  const std::vector<double> big{ 1000.0, 1000.0 };
  EXPECT_NEAR(log_sum_exp(big), 1000.0 + std::log(2.0), 1e-12);
  const std::vector<double> tiny{ -2000.0, -2000.0 - std::log(3.0) };
  EXPECT_NEAR(log_sum_exp(tiny), -2000.0 + std::log(4.0 / 3.0), 1e-12);
  EXPECT_NEAR(log_add_exp(-745.5, -745.5), -745.5 + std::log(2.0), 1e-12);
}

TEST(LogSumExp, OrderDoesNotMatterBeyondRounding)
{
  std::vector<double> v;
  for (int i = 0; i < 200; ++i)
    v.push_back(-0.37 * i);
  const double fwd = log_sum_exp(v);
  std::reverse(v.begin(), v.end());
  EXPECT_NEAR(log_sum_exp(v), fwd, 1e-14);
}

TEST(NormalTail, FrozenValues)
{
  EXPECT_NEAR(std::exp(log_normal_upper_tail(2.0)), oracle::kQ2, 1e-16);
  EXPECT_NEAR(std::exp(log_normal_upper_tail(10.0)) / oracle::kQ10, 1.0, 1e-12);
  EXPECT_NEAR(log_normal_upper_tail(40.0), oracle::kLogQ40, 1e-10);
  EXPECT_NEAR(log_normal_upper_tail(0.0), std::log(0.5), 1e-15);
}

TEST(NormalTail, ContinuousAcrossBranchSwitches)
{
  for (double z : { 8.0, -8.0 }) {
    const double below = log_normal_upper_tail(std::nextafter(z, -100.0));
    const double above = log_normal_upper_tail(std::nextafter(z, 100.0));
    EXPECT_NEAR(below, above, 1e-10) << "z = " << z;
  }
}

TEST(NormalTail, LowerSideApproachesZero)
{
  EXPECT_NEAR(log_normal_upper_tail(-2.0), std::log1p(-oracle::kQ2), 1e-15);
  EXPECT_NEAR(log_normal_upper_tail(-40.0), 0.0, 1e-300);
  EXPECT_LE(log_normal_upper_tail(-40.0), 0.0);
}

TEST(NormalTail, StaysFiniteFarOut)
{
  const double v = log_normal_upper_tail(1e4);
  EXPECT_TRUE(std::isfinite(v));
  EXPECT_NEAR(v, -0.5e8 - std::log(1e4) - kLogSqrt2Pi, 1e-6);
}

TEST(FitLine, ExactLine)
{
  const std::vector<double> x{ 0, 1, 2, 3, 4 };
  std::vector<double> y;
  for (double v : x)
    y.push_back(2.5 - 0.75 * v);
  const auto f = fit_line(x, y);
  EXPECT_NEAR(f.slope, -0.75, 1e-14);
  EXPECT_NEAR(f.intercept, 2.5, 1e-14);
  EXPECT_NEAR(f.max_abs_residual, 0.0, 1e-14);
}

TEST(FitLine, RejectsDegenerateInput)
{
  const std::vector<double> one{ 1.0 };
  EXPECT_THROW(fit_line(one, one), std::invalid_argument);
  const std::vector<double> same{ 2.0, 2.0, 2.0 }, y{ 1.0, 2.0, 3.0 };
  EXPECT_THROW(fit_line(same, y), std::invalid_argument);
  const std::vector<double> short_y{ 1.0, 2.0 };
  EXPECT_THROW(fit_line(y, short_y), std::invalid_argument);
}

TEST(UniformNodes, HitsBothEnds)
{
  const auto n = uniform_nodes(-1.0, 1.0, 0.25);
  ASSERT_EQ(n.size(), 9u);
  EXPECT_DOUBLE_EQ(n.front(), -1.0);
  EXPECT_NEAR(n.back(), 1.0, 1e-15);
  EXPECT_THROW(uniform_nodes(0.0, 1.0, 0.0), std::invalid_argument);
}
