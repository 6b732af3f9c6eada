#include "olfw/analysis.hpp"
#include "olfw/difw.hpp"
#include "olfw/objectives.hpp"
#include "olfw/reference.hpp"

#include <gtest/gtest.h>

using namespace olfw;

namespace {

Instance simplex_instance(std::size_t d, Location loc, MatrixKind m = MatrixKind::identity, double rho = 0.0) {
    InstanceSpec s;
    s.region = {RegionKind::simplex, 2.0, 1.0, d};
    s.location = loc;
    s.matrix = m;
    s.rho = rho;
    auto inst = generate_instance(s);
    inst.objective.set_reference(reference_optimum(inst.objective, inst.region));
    return inst;
}

Point e1(std::size_t d) {
    Point x = Point::Zero(static_cast<Eigen::Index>(d));
    x[0] = 1;
    return x;
}

}  // namespace

TEST(DifwStep, Examples) {
    EXPECT_EQ(difw_delta(0, 8), 0);
    EXPECT_EQ(difw_step(0, 8), 1.0);
    EXPECT_EQ(difw_delta(8, 8), 1);
    EXPECT_EQ(difw_step(8, 8), 0.5);
    EXPECT_EQ(difw_delta(9, 8), 2);
    EXPECT_EQ(difw_step(9, 8), 0.25);
}

TEST(DifwStep, MatchesFloatingDefinition) {
    for (int ell : {1, 2, 4, 8})
        for (std::size_t t = 0; t < 5000; ++t) {
            double eta = static_cast<double>(ell) / (t + ell);
            double g = difw_step(t, ell);
            EXPECT_LE(g, eta);
            EXPECT_GT(2 * g, eta);
        }
}

TEST(DifwRun, FeasibilityAndPairwiseGap) {
    for (Location loc : {Location::interior, Location::boundary, Location::exterior}) {
        auto inst = simplex_instance(60, loc, MatrixKind::random);
        const auto& s = std::get<ProbabilitySimplex>(inst.region);
        const double L = inst.objective.smoothness(), delta = s.diameter();
        for (auto rule : {StepRule::open_loop(8), StepRule::line_search()}) {
            std::size_t bad = 0;
            auto tr = difw_run(inst.objective, s, rule, e1(60), 3000, {},
                               [&](std::size_t t, const Point& x, const TraceRecord&) {
                                   if (x.minCoeff() < -1e-12 || std::abs(x.sum() - 1) > 1e-10) ++bad;
                                   if (t == 0) return;
                                   Point g = inst.objective.gradient(x);
                                   if (g.dot(s.away_lmo(g, x) - s.lmo(g)) < -1e-12) ++bad;
                               });
            EXPECT_EQ(bad, 0u) << to_string(loc) << " " << rule.to_string();
            if (rule == StepRule::open_loop(8))
                for (std::size_t t = 1; t < tr.size(); ++t) EXPECT_LE(tr[t].h, 32 * L * delta * delta / (t + 7) + 1e-9);
        }
    }
}

TEST(DifwRun, AcceleratedOnSparseOptimum) {
    for (Location loc : {Location::boundary, Location::exterior}) {
        auto inst = simplex_instance(100, loc, MatrixKind::random);
        auto tr = difw_run(inst.objective, std::get<ProbabilitySimplex>(inst.region), StepRule::open_loop(8), e1(100), 10000);
        auto h = tr.gaps();
        if (tr.meta.early_exit) continue;
        EXPECT_GE(fit_rate(h, 100, 10000).slope, 1.8) << to_string(loc);
    }
}

TEST(DifwRun, RejectsUnsupportedRules) {
    auto inst = simplex_instance(4, Location::interior);
    const auto& s = std::get<ProbabilitySimplex>(inst.region);
    EXPECT_THROW(difw_run(inst.objective, s, StepRule::short_step(), e1(4), 5), config_error);
    EXPECT_THROW(difw_run(inst.objective, s, StepRule::constant(0.5), e1(4), 5), config_error);
}
