#include "olfw/analysis.hpp"

#include <gtest/gtest.h>

using namespace olfw;

namespace {

template <class F>
std::vector<double> series(std::size_t n, F f) {
    std::vector<double> h(n);
    for (std::size_t s = 0; s < n; ++s) h[s] = f(static_cast<double>(s));
    return h;
}

InstanceSpec family(Location loc) {
    InstanceSpec s;
    s.region.kind = RegionKind::simplex;
    s.matrix = MatrixKind::identity;
    s.location = loc;
    if (loc == Location::face) s.rho = 2.0;
    return s;
}

}  // namespace

TEST(MinPrefix, Examples) {
    std::vector<double> h{3, 1, 2, 0.5};
    EXPECT_EQ(min_prefix(h), (std::vector<double>{3, 1, 1, 0.5}));
    std::vector<double> c(5, 2.0), dec{5, 4, 3, 2, 1};
    EXPECT_EQ(min_prefix(c), c);
    EXPECT_EQ(min_prefix(dec), dec);
    auto once = min_prefix(h);
    EXPECT_EQ(min_prefix(once), once);
    EXPECT_TRUE(min_prefix(std::vector<double>{}).empty());
}

// Regression is on log(s + 1), so exact power laws are written in s + 1.
TEST(LocalRate, ExactPowerLaws) {
    auto quad = series(1000, [](double s) { return 3.0 / ((s + 1) * (s + 1)); });
    auto lin = series(1000, [](double s) { return 0.7 / (s + 1); });
    for (std::size_t t : {0, 50, 500, 899}) {
        EXPECT_NEAR(local_rate(quad, t).slope, 2.0, 1e-9);
        EXPECT_NEAR(local_rate(lin, t).slope, 1.0, 1e-9);
        EXPECT_NEAR(local_rate(quad, t).r_squared, 1.0, 1e-12);
    }
}

TEST(LocalRate, GeometricDecayIsSteep) {
    auto geo = series(300, [](double s) { return 5.0 * std::pow(0.9, s); });
    EXPECT_GE(local_rate(geo, 100, 100).slope, 10.0);
}

TEST(LocalRate, ZeroGapGivesInfiniteSlope) {
    std::vector<double> h(200, 1.0);
    h[150] = 0.0;
    EXPECT_TRUE(std::isinf(local_rate(h, 100, 60).slope));
    EXPECT_THROW(local_rate(h, 150, 60), config_error);
}

TEST(BurnIn, SyntheticKink) {
    // Slow 1/t until t = 1e4, then 1e4/t^2. Oracle: an independent scan of the windowed slope.
    auto kink = series(40000, [](double s) { return std::min(1.0 / (s + 1), 1e4 / ((s + 1) * (s + 1))); });
    std::optional<std::size_t> oracle;
    for (std::size_t t = 0; t + 100 < kink.size() && !oracle; ++t) {
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        for (std::size_t s = t; s <= t + 100; ++s) {
            double x = std::log(s + 1.0), y = std::log(kink[s]);
            sx += x;
            sy += y;
            sxx += x * x;
            sxy += x * y;
        }
        double n = 101, beta = (n * sxy - sx * sy) / (n * sxx - sx * sx);
        if (-beta >= 1.8) oracle = t;
    }
    ASSERT_TRUE(oracle);
    auto got = burn_in_end(kink);
    ASSERT_TRUE(got);
    EXPECT_EQ(*got, *oracle);
    EXPECT_GE(*got, 5000u);
    EXPECT_LE(*got, 20000u);
}

TEST(BurnIn, PureRates) {
    auto quad = series(500, [](double s) { return 1.0 / ((s + 1) * (s + 1)); });
    auto lin = series(500, [](double s) { return 1.0 / (s + 1); });
    EXPECT_EQ(burn_in_end(quad), std::optional<std::size_t>(0));
    EXPECT_EQ(burn_in_end(lin), std::nullopt);
}

TEST(RateContour, InteriorFamilyIsFastAfterTenD) {
    auto c = rate_contour(family(Location::interior), {10}, 1000);
    ASSERT_TRUE(c.failures.empty());
    ASSERT_FALSE(c.cells.empty());
    for (const auto& cell : c.cells)
        if (cell.t >= 100) EXPECT_GE(cell.slope, 1.8) << cell.t;
}

TEST(RateContour, FaceBurnInEndsEarlierThanInterior) {
    auto hi = contour_trace(family(Location::interior), 10, 1000);
    auto hf = contour_trace(family(Location::face), 10, 1000);
    auto bi = burn_in_end(hi), bf = burn_in_end(hf);
    ASSERT_TRUE(bi);
    ASSERT_TRUE(bf);
    EXPECT_LT(*bf, *bi);
}

TEST(RateContour, EmptyAndDeterministic) {
    EXPECT_TRUE(rate_contour(family(Location::interior), {}, 1000).cells.empty());
    auto a = rate_contour(family(Location::face), {12, 20}, 400);
    auto b = rate_contour(family(Location::face), {12, 20}, 400);
    std::ostringstream sa, sb;
    write_contour_csv(sa, a);
    write_contour_csv(sb, b);
    EXPECT_EQ(sa.str(), sb.str());
    EXPECT_EQ(sa.str().substr(0, 11), "d,t,slope,r");
}
