#include "olfw/regions.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace olfw;

namespace {

Point vec(std::initializer_list<double> v) {
    Point p(static_cast<Eigen::Index>(v.size()));
    Eigen::Index i = 0;
    for (double x : v) p[i++] = x;
    return p;
}

void expect_point(const Point& a, const Point& b, double tol = 1e-15) {
    ASSERT_EQ(a.size(), b.size());
    for (Eigen::Index i = 0; i < a.size(); ++i) EXPECT_NEAR(a[i], b[i], tol) << "coordinate " << i;
}

}  // namespace

TEST(LpBallLmo, Examples) {
    expect_point(LpBall(2, 1, 2).lmo(vec({3, -4})), vec({-0.6, 0.8}));
    expect_point(LpBall(1, 1, 3).lmo(vec({0.2, -5, 1})), vec({0, 1, 0}));
    expect_point(LpBall(5, 2, 2).lmo(vec({1, 0})), vec({-2, 0}));
}

TEST(LpBallLmo, ZeroCostReturnsCenter) {
    LpBall b(3, 1, vec({0.5, -0.5}));
    expect_point(b.lmo(vec({0, 0})), vec({0.5, -0.5}));
}

TEST(LpBallLmo, HugeCostsStayFinite) {
    LpBall b(1.5, 1, 3);
    Point x = b.lmo(vec({1e200, -1e200, 1e-200}));
    EXPECT_TRUE(x.allFinite());
    EXPECT_NEAR(b.norm(x), 1.0, 1e-12);
}

TEST(LpBallLmo, AttainsDualNorm) {
    std::mt19937_64 rng(11);
    std::normal_distribution<double> n(0.0, 1.0);
    for (double p : {1.0, 1.5, 2.0, 3.0, 5.0}) {
        LpBall b(p, 1.7, 6);
        double q = p == 1.0 ? std::numeric_limits<double>::infinity() : p / (p - 1.0);
        for (int k = 0; k < 50; ++k) {
            Point c(6);
            for (int i = 0; i < 6; ++i) c[i] = n(rng);
            double dual = std::isinf(q) ? c.cwiseAbs().maxCoeff() : lp_norm(c, q);
            Point x = b.lmo(c);
            EXPECT_NEAR(c.dot(x), -1.7 * dual, 1e-12);
            EXPECT_TRUE(b.contains(x, 1e-10));
        }
    }
}

TEST(LpBall, Metadata) {
    EXPECT_DOUBLE_EQ(LpBall(2, 1, 100).diameter(), 2.0);
    EXPECT_DOUBLE_EQ(LpBall(1, 1, 100).diameter(), 2.0);
    EXPECT_NEAR(LpBall(4, 1, 16).diameter(), 2.0 * std::pow(16.0, 0.25), 1e-14);
    EXPECT_FALSE(LpBall(1, 1, 3).uniform_convexity());
    auto u2 = LpBall(2, 2, 3).uniform_convexity();
    ASSERT_TRUE(u2);
    EXPECT_DOUBLE_EQ(u2->alpha, 0.5);
    EXPECT_DOUBLE_EQ(u2->q, 2.0);
    auto u3 = LpBall(3, 1, 4).uniform_convexity();
    ASSERT_TRUE(u3);
    EXPECT_DOUBLE_EQ(u3->q, 3.0);
    EXPECT_THROW(LpBall(0.5, 1, 2), config_error);
    EXPECT_THROW(LpBall(2, 0, 2), config_error);
}

// Strong-convexity check of the set: for x, y in the ball and gamma in [0, 1], the ball of radius
// (alpha / 2) gamma (1 - gamma) ||x - y||^q around the convex combination stays inside.
TEST(LpBall, UniformConvexityConstantIsValid) {
    std::mt19937_64 rng(5);
    std::normal_distribution<double> n(0.0, 1.0);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (double p : {1.5, 2.0, 3.0, 4.0, 6.0}) {
        const int d = 5;
        LpBall b(p, 1.3, d);
        auto uc = *b.uniform_convexity();
        for (int k = 0; k < 300; ++k) {
            Point x(d), y(d), z(d);
            for (int i = 0; i < d; ++i) {
                x[i] = n(rng);
                y[i] = n(rng);
                z[i] = n(rng);
            }
            x *= 1.3 / lp_norm(x, p);
            y *= 1.3 / lp_norm(y, p);
            z /= z.norm();
            double g = u(rng);
            double rad = 0.5 * uc.alpha * g * (1 - g) * std::pow((x - y).norm(), uc.q);
            EXPECT_TRUE(b.contains(g * x + (1 - g) * y + rad * z, 1e-12)) << "p=" << p;
        }
    }
}

TEST(LpBall, VertexInterfaceForL1) {
    LpBall b(1, 2, 3);
    EXPECT_EQ(b.vertex_count(), 6u);
    expect_point(b.vertex(0), vec({2, 0, 0}));
    expect_point(b.vertex(5), vec({0, 0, -2}));
    Point c = vec({0.1, -3, 0.5});
    auto v = b.lmo_vertex(c);
    expect_point(b.vertex(v), b.lmo(c));
    EXPECT_DOUBLE_EQ(b.vertex_dot(v, c), c.dot(b.vertex(v)));
    EXPECT_EQ(b.find_vertex(vec({0, -2, 0})), std::optional<std::size_t>(3));
    EXPECT_THROW(LpBall(2, 1, 2).vertex(0), config_error);
}

TEST(SimplexLmo, Examples) {
    ProbabilitySimplex s3(3), s2(2);
    expect_point(s3.lmo(vec({3, 1, 2})), vec({0, 1, 0}));
    expect_point(s3.lmo(vec({1, 1, 1})), vec({1, 0, 0}));
    expect_point(s2.lmo(vec({-1, 0})), vec({1, 0}));
}

TEST(SimplexAwayLmo, Examples) {
    ProbabilitySimplex s3(3), s2(2);
    expect_point(s3.away_lmo(vec({5, 1, 9}), vec({0.5, 0.5, 0})), vec({1, 0, 0}));
    expect_point(s2.away_lmo(vec({1, 2}), vec({0, 1})), vec({0, 1}));
    expect_point(s3.away_lmo(vec({2, 2, 2}), vec({1.0 / 3, 1.0 / 3, 1.0 / 3})), vec({1, 0, 0}));
    EXPECT_THROW(s2.away_lmo(vec({1, 2}), vec({0, 0})), solver_error);
}

TEST(Simplex, Metadata) {
    ProbabilitySimplex s(4);
    EXPECT_DOUBLE_EQ(s.diameter(), std::sqrt(2.0));
    EXPECT_EQ(ProbabilitySimplex(1).diameter(), 0.0);
    EXPECT_TRUE(s.contains(vec({0.25, 0.25, 0.25, 0.25})));
    EXPECT_FALSE(s.contains(vec({0.5, 0.5, 0.5, -0.5})));
    EXPECT_FALSE(s.contains(vec({0.25, 0.25, 0.25})));
    EXPECT_EQ(s.constraint_matrix().rows(), 1);
    EXPECT_FALSE(s.uniform_convexity());
    EXPECT_THROW(ProbabilitySimplex(0), config_error);
}

TEST(Simplex, ProjectionAgainstSupportEnumeration) {
    // Oracle: for each support set, the KKT point of min ||x - v||^2 is v_S - (sum v_S - 1)/|S|.
    std::mt19937_64 rng(17);
    std::normal_distribution<double> n(0.0, 1.0);
    for (int k = 0; k < 100; ++k) {
        const int d = 5;
        Point v(d);
        for (int i = 0; i < d; ++i) v[i] = 2 * n(rng);
        double best = std::numeric_limits<double>::infinity();
        Point best_x;
        for (unsigned mask = 1; mask < (1u << d); ++mask) {
            double sum = 0;
            int card = 0;
            for (int i = 0; i < d; ++i)
                if (mask >> i & 1) {
                    sum += v[i];
                    ++card;
                }
            double shift = (sum - 1) / card;
            Point x = Point::Zero(d);
            bool ok = true;
            for (int i = 0; i < d; ++i)
                if (mask >> i & 1) {
                    x[i] = v[i] - shift;
                    ok = ok && x[i] >= 0;
                }
            if (ok && (x - v).squaredNorm() < best) {
                best = (x - v).squaredNorm();
                best_x = x;
            }
        }
        expect_point(project_onto_simplex(v), best_x, 1e-12);
    }
    expect_point(project_onto_simplex(vec({0, 0, 2, 2})), vec({0, 0, 0.5, 0.5}));
}

TEST(Jaggi, Examples) {
    EXPECT_NEAR(jaggi_lower_bound(4, 2), 0.5, 1e-15);
    EXPECT_NEAR(jaggi_lower_bound(8, 8), 0.125, 1e-15);
    EXPECT_NEAR(jaggi_lower_bound(3, 1), 1.0, 1e-15);
    EXPECT_THROW(jaggi_lower_bound(3, 0), config_error);
    EXPECT_THROW(jaggi_lower_bound(3, 4), config_error);
}

TEST(LmoOptimality, RandomCostsAndPoints) {
    std::mt19937_64 rng(23);
    std::normal_distribution<double> n(0.0, 1.0);
    std::exponential_distribution<double> e(1.0);
    const int d = 6;
    ProbabilitySimplex s(d);
    std::vector<LpBall> balls{LpBall(1, 1, d), LpBall(1.5, 1, d), LpBall(2, 1, d), LpBall(3, 2, d), LpBall(5, 1, d)};
    for (int k = 0; k < 1000; ++k) {
        Point c(d), z(d), w(d);
        for (int i = 0; i < d; ++i) {
            c[i] = n(rng);
            z[i] = n(rng);
            w[i] = e(rng);
        }
        w /= w.sum();
        EXPECT_LE(c.dot(s.lmo(c)), c.dot(w) + 1e-10);
        EXPECT_TRUE(s.contains(s.lmo(c), 1e-10));
        for (const auto& b : balls) {
            double u = e(rng);
            Point x = z * (b.radius() * u / (1 + u) / lp_norm(z, b.p()));
            Point l = b.lmo(c);
            EXPECT_TRUE(b.contains(l, 1e-10));
            EXPECT_LE(c.dot(l), c.dot(x) + 1e-10);
            EXPECT_LE((l - x).norm(), b.diameter() + 1e-10);
        }
    }
}
