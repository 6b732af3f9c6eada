#include "olfw/core.hpp"
#include "olfw/objectives.hpp"

#include <gtest/gtest.h>

#include <random>
#include <sstream>

using namespace olfw;

namespace {

// Plain quadratic used to drive step_length without the library objective.
struct Quad {
    Point xhat;
    double L = 1.0;
    double value(const Point& x) const { return 0.5 * L * (x - xhat).squaredNorm(); }
    Point gradient(const Point& x) const { return L * (x - xhat); }
    double smoothness() const { return L; }
    double optimal_value() const { return 0.0; }
    double primal_gap(const Point& x) const { return value(x); }
};

// Same objective without curvature(), to exercise the golden-section path.
struct QuadWithCurvature : Quad {
    double curvature(const Point& d) const { return L * d.squaredNorm(); }
};

Point vec(std::initializer_list<double> v) {
    Point p(static_cast<Eigen::Index>(v.size()));
    Eigen::Index i = 0;
    for (double x : v) p[i++] = x;
    return p;
}

}  // namespace

TEST(StepRule, OpenLoopValues) {
    EXPECT_EQ(StepRule::open_loop(4).open_loop_value(0), 1.0);
    EXPECT_EQ(StepRule::open_loop(2).open_loop_value(2), 0.5);
    for (int ell : {1, 2, 4, 8})
        for (std::size_t t = 0; t < 100; ++t)
            EXPECT_EQ(StepRule::open_loop(ell).open_loop_value(t), static_cast<double>(ell) / (t + ell));
}

TEST(StepRule, ShortStepExample) {
    Quad f{vec({0.0, 0.0}), 1.0};
    // grad = (1, 0) at x = (1, 0); p = (0, 0) so x - p = (1, 0)
    Point x = vec({1.0, 0.0}), p = vec({0.0, 0.0});
    EXPECT_DOUBLE_EQ(step_length(StepRule::short_step(), 0, f, x, p, f.gradient(x)), 1.0);
}

TEST(StepRule, ConstantFromParameters) {
    EXPECT_DOUBLE_EQ(constant_step_eta(1.0, 0.5, 1.0), 0.25);
    Quad f{vec({0.0}), 1.0};
    Point x = vec({1.0}), p = vec({0.0});
    EXPECT_DOUBLE_EQ(step_length(StepRule::constant(0.25), 7, f, x, p, f.gradient(x)), 0.25);
}

TEST(StepRule, ParseRoundTrip) {
    for (const char* s : {"openloop:1", "openloop:4", "openloop:8", "linesearch", "shortstep", "constant", "constant:0.25"}) {
        auto r = StepRule::parse(s);
        EXPECT_EQ(r.to_string(), s);
        EXPECT_EQ(StepRule::parse(r.to_string()), r);
    }
    for (const char* s : {"openloop", "openloop:0", "openloop:x", "openloop:2x", "linesearch:1", "constant:2", "constant:-1", "foo"})
        EXPECT_THROW(StepRule::parse(s), config_error) << s;
    EXPECT_FALSE(StepRule::constant().resolved());
    EXPECT_TRUE(StepRule::constant(0.5).resolved());
}

TEST(StepRule, GenericLineSearchMatchesClosedForm) {
    std::mt19937_64 rng(3);
    std::normal_distribution<double> n(0.0, 1.0);
    for (int k = 0; k < 50; ++k) {
        Point xhat(3), x(3), p(3);
        for (int i = 0; i < 3; ++i) {
            xhat[i] = n(rng);
            x[i] = n(rng);
            p[i] = n(rng);
        }
        Quad plain{xhat, 2.0};
        QuadWithCurvature curved{{xhat, 2.0}};
        double a = step_length(StepRule::line_search(), 0, plain, x, p, plain.gradient(x));
        double b = step_length(StepRule::line_search(), 0, curved, x, p, curved.gradient(x));
        EXPECT_NEAR(a, b, 1e-12);
        EXPECT_GE(b, 0.0);
        EXPECT_LE(b, 1.0);
    }
}

TEST(StepRule, ShortStepDegenerateDirection) {
    Point g = vec({1.0, 2.0}), d = vec({0.0, 0.0});
    EXPECT_THROW(short_step_length(g, d, 1.0, 1.0), degenerate_direction);
}

TEST(Recurrence, HandIteratedExample) {
    // Independent loop: h_{t+1} = (1 - 2/(t+4)) h_t.
    std::vector<double> oracle{1.0};
    for (int t = 0; t < 4; ++t) oracle.push_back(oracle.back() * (1.0 - 2.0 / (t + 4.0)));
    const std::vector<double> frozen{1.0, 0.5, 0.3, 0.2, 1.0 / 7.0};
    for (std::size_t i = 0; i < frozen.size(); ++i) EXPECT_NEAR(oracle[i], frozen[i], 1e-15);

    std::vector<double> Ct(4, 0.0);
    auto h = simulate_recurrence({1.0, 0.0, 1.0, 0.0}, Ct, 0, 1.0, 4);
    ASSERT_EQ(h.size(), 5u);
    for (std::size_t i = 0; i < frozen.size(); ++i) EXPECT_NEAR(h[i], frozen[i], 1e-15);
}

TEST(Recurrence, ZeroIsFixedPoint) {
    std::vector<double> Ct(50, 0.7);
    auto h = simulate_recurrence({1.0, 0.0, 1.0, 0.3}, Ct, 3, 0.0, 50);
    for (double v : h) EXPECT_EQ(v, 0.0);
}

TEST(Recurrence, RejectsBadParameters) {
    std::vector<double> Ct(10, 0.5);
    EXPECT_THROW(simulate_recurrence({0.0, 1.0, 1.0, 0.0}, Ct, 0, 1.0, 5), config_error);
    EXPECT_THROW(simulate_recurrence({1.0, 1.0, 1.0, 0.6}, Ct, 0, 1.0, 5), config_error);
    EXPECT_THROW(simulate_recurrence({1.0, 1.0, 0.4, 0.0}, Ct, 0, 1.0, 5), config_error);
    EXPECT_THROW(simulate_recurrence({1.0, 1.0, 1.0, 0.0}, Ct, 0, 1.0, 20), config_error);
}

TEST(RunTrace, CsvLayoutAndPadding) {
    RunTrace tr;
    for (std::size_t t = 0; t < 3; ++t) {
        TraceRecord r;
        r.t = t;
        r.h = t == 1 ? 0.5 : 1.0 / (t + 1);
        r.fw_gap = 2.0;
        r.eta = 0.5;
        tr.push(r);
    }
    tr.pad_to(5);
    EXPECT_EQ(tr.size(), 6u);
    EXPECT_TRUE(tr.meta.early_exit);
    EXPECT_EQ(tr.meta.exit_iteration, 2u);
    std::ostringstream os;
    tr.write_csv(os);
    std::istringstream is(os.str());
    std::string header;
    std::getline(is, header);
    EXPECT_EQ(header, "t,h,h_min_prefix,fw_gap,eta,step_kind");
    std::istringstream again(os.str());
    auto h = read_trace_gaps(again);
    ASSERT_EQ(h.size(), 6u);
    EXPECT_EQ(h[5], 1.0 / 3.0);
}

TEST(RunTrace, RejectsNegativeAndNonFiniteGaps) {
    RunTrace tr;
    TraceRecord r;
    r.h = -1e-6;
    EXPECT_THROW(tr.push(r), solver_error);
    r.h = std::numeric_limits<double>::quiet_NaN();
    EXPECT_THROW(tr.push(r), solver_error);
    r.h = -1e-12;
    tr.push(r);
    EXPECT_EQ(tr[0].h, 0.0);
}

TEST(Formatting, RoundTripAndFixedWidth) {
    EXPECT_EQ(fmt_double(0.5), "5.0000000000000000e-01");
    for (double v : {0.1, 1.0 / 3.0, 1e-300, 12345.678})
        EXPECT_EQ(parse_double(fmt_roundtrip(v)), v);
    EXPECT_THROW(parse_double("1.0x"), config_error);
}
