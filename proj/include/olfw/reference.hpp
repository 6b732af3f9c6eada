#pragma once

#include "olfw/afw.hpp"
#include "olfw/fw.hpp"
#include "olfw/objectives.hpp"

namespace olfw {

namespace detail {

template <feasible_region R>
double fw_gap_at(const QuadraticObjective& f, const R& region, const Point& x) {
    Point g = f.gradient(x);
    return g.dot(x - region.lmo(g));
}

inline bool certified_width(double gap, double fx) { return gap <= 1e-12 * (1.0 + std::abs(fx)); }

template <feasible_region R>
ReferenceOptimum finish(const QuadraticObjective& f, const R& region, Point x, std::string method) {
    ReferenceOptimum ref;
    ref.fstar = f.value(x);
    double gap = std::max(0.0, fw_gap_at(f, region, x));
    ref.lower_bound = ref.fstar - gap;
    ref.certified = certified_width(gap, ref.fstar);
    ref.xstar = std::move(x);
    ref.method = std::move(method);
    return ref;
}

// Damped Newton on grad f(x) + nu grad phi(x) = 0, phi(x) = ||x - c||_p^p - r^p, for p >= 2.
inline std::optional<Point> lp_kkt_newton(const QuadraticObjective& f, const LpBall& ball, Point x) {
    const double p = ball.p();
    const double rp = std::pow(ball.radius(), p);
    const Eigen::Index n = x.size();
    const Matrix Q = f.hessian();

    auto residual = [&](const Point& xx, double nu) {
        Point y = xx - ball.center();
        Eigen::ArrayXd a = y.cwiseAbs().array();
        Point dphi = (p * y.array().sign() * a.pow(p - 1.0)).matrix();
        Point r(n + 1);
        r.head(n) = f.gradient(xx) + nu * dphi;
        r[n] = (a.pow(p).sum() - rp) / rp;
        return r;
    };

    Point y = x - ball.center();
    Point dphi = (p * y.array().sign() * y.cwiseAbs().array().pow(p - 1.0)).matrix();
    double nu = -f.gradient(x).dot(dphi) / dphi.squaredNorm();
    if (!(nu > 0.0)) return std::nullopt;

    Point F = residual(x, nu);
    for (int it = 0; it < 100 && F.norm() > 1e-15 * (1.0 + f.gradient(x).norm()); ++it) {
        y = x - ball.center();
        Eigen::ArrayXd a = y.cwiseAbs().array();
        Matrix J = Matrix::Zero(n + 1, n + 1);
        J.topLeftCorner(n, n) = Q;
        J.diagonal().head(n).array() += nu * p * (p - 1.0) * a.pow(p - 2.0);
        Point g = (p * y.array().sign() * a.pow(p - 1.0)).matrix();
        J.block(0, n, n, 1) = g;
        J.block(n, 0, 1, n) = g.transpose() / rp;
        Point step = J.completeOrthogonalDecomposition().solve(-F);
        double s = 1.0;
        bool improved = false;
        for (int k = 0; k < 40; ++k, s *= 0.5) {
            Point xn = x + s * step.head(n);
            double nun = nu + s * step[n];
            Point Fn = residual(xn, nun);
            if (Fn.norm() < F.norm()) {
                x = xn;
                nu = nun;
                F = Fn;
                improved = true;
                break;
            }
        }
        if (!improved) break;
    }
    if (!x.allFinite() || !(nu > 0.0)) return std::nullopt;
    y = x - ball.center();
    return Point(ball.center() + y * (ball.radius() / lp_norm(y, p)));
}

}  // namespace detail

// Optimal value and solution used as the h_t reference. Closed form when the unconstrained
// minimiser is feasible, exact projection for the simplex with scaled identity, AFW line search
// on polytopes, and KKT Newton polish on lp balls. Width certified by the FW gap.
inline ReferenceOptimum reference_optimum(const QuadraticObjective& f, const Region& region) {
    const Point xu = f.unconstrained_minimizer();
    return std::visit(
        [&](const auto& reg) -> ReferenceOptimum {
            using R = std::decay_t<decltype(reg)>;
            if (reg.contains(xu, 1e-12)) {
                ReferenceOptimum ref;
                ref.xstar = xu;
                ref.fstar = f.value(xu);
                ref.lower_bound = ref.fstar;
                ref.method = "closed_form";
                return ref;
            }
            RunOptions opt;
            opt.track_gap = false;
            opt.pad_on_exit = false;
            opt.gap_tolerance = 1e-14;
            if constexpr (std::is_same_v<R, ProbabilitySimplex>) {
                if (f.is_identity()) return detail::finish(f, reg, project_onto_simplex(xu), "projection");
                auto tr = afw_run(f, reg, StepRule::line_search(), reg.lmo_vertex(f.gradient(reg.vertex(0))),
                                  1'000'000, opt);
                return detail::finish(f, reg, tr.x_final, "afw_line_search");
            } else {
                if (reg.p() == 1.0) {
                    auto tr = afw_run(f, reg, StepRule::line_search(), std::size_t{0}, 1'000'000, opt);
                    return detail::finish(f, reg, tr.x_final, "afw_line_search");
                }
                Point x0 = reg.lmo(f.gradient(reg.center()));
                auto warm = fw_run(f, reg, StepRule::line_search(), x0, 5000, opt);
                if (reg.p() >= 2.0) {
                    if (auto x = detail::lp_kkt_newton(f, reg, warm.x_final)) {
                        auto ref = detail::finish(f, reg, *x, "kkt_newton");
                        if (ref.certified) return ref;
                    }
                }
                auto longer = fw_run(f, reg, StepRule::line_search(), warm.x_final, 200'000, opt);
                return detail::finish(f, reg, longer.x_final, "fw_line_search");
            }
        },
        region);
}

}  // namespace olfw
