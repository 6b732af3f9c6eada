#pragma once

#include "olfw/fw.hpp"

namespace olfw {

// Smallest delta with 2^-delta <= ell/(t+ell), by integer comparison (t+ell) <= ell * 2^delta.
inline int difw_delta(std::size_t t, int ell) {
    if (ell < 1) throw config_error("difw: ell must be positive");
    const unsigned long long lhs = t + static_cast<unsigned long long>(ell);
    int delta = 0;
    unsigned long long rhs = static_cast<unsigned long long>(ell);
    while (rhs < lhs) {
        rhs <<= 1;
        ++delta;
    }
    return delta;
}

inline double difw_step(std::size_t t, int ell) { return std::ldexp(1.0, -difw_delta(t, ell)); }

// Decomposition-invariant pairwise FW. x_1 = lmo(grad f(x_0)); afterwards
// x_{t+1} = x_t + gamma_t (p+ - p-) with the away vertex restricted to supp(x_t).
// Observers see (t, x, record t) after step t is applied.
template <objective_oracle F, simplex_like_region R, class Observer = no_observer>
RunTrace difw_run(const F& f, const R& region, const StepRule& rule, const Point& x0, std::size_t T,
                  const RunOptions& opt = {}, Observer&& observe = {}) {
    if (T < 1) throw config_error("difw_run: need T >= 1");
    if (rule.kind() != StepRule::Kind::open_loop && rule.kind() != StepRule::Kind::line_search)
        throw config_error("difw_run: only open-loop and line-search rules are supported");
    if (!region.contains(x0, 1e-10)) throw config_error("difw_run: infeasible x0");
    RunTrace trace;
    detail::fill_metadata(trace.meta, "difw", rule, f, region);
    const Matrix M = region.constraint_matrix();
    const Point rhs = region.constraint_rhs();

    auto check_feasible = [&](const Point& x, std::size_t t) {
        if (x.minCoeff() < -support_threshold || (M * x - rhs).norm() > 1e-10)
            throw solver_error("difw_run: infeasible iterate at t=" + std::to_string(t) + ", x=" + detail::dump_point(x));
    };

    Point x = x0;
    for (std::size_t t = 0;; ++t) {
        const double fx = f.value(x);
        if (!std::isfinite(fx)) throw solver_error("difw_run: non-finite objective at t=" + std::to_string(t));
        const Point g = f.gradient(x);
        const Point p_plus = region.lmo(g);
        TraceRecord rec;
        rec.t = t;
        rec.h = opt.track_gap ? f.primal_gap(x) : 0.0;
        rec.fw_gap = g.dot(x - p_plus);
        rec.grad_norm = g.norm();

        const bool converged = opt.early_exit && rec.fw_gap <= opt.gap_tolerance * (1.0 + std::abs(fx));
        if (converged || t == T) {
            trace.push(rec);
            observe(t, std::as_const(x), std::as_const(rec));
            if (converged && t < T && opt.pad_on_exit) trace.pad_to(T);
            break;
        }

        if (t == 0) {
            rec.eta = 1.0;
            trace.push(rec);
            x = p_plus;
        } else {
            const Point p_minus = region.away_lmo(g, x);
            const Point d = p_plus - p_minus;
            const double pair_gap = -g.dot(d);
            if (d.cwiseAbs().maxCoeff() == 0.0) {
                if (pair_gap > opt.gap_tolerance * (1.0 + std::abs(fx)) || rec.fw_gap > 1e-12 * (1.0 + std::abs(fx)))
                    throw solver_error("difw_run: p+ == p- with positive gap at t=" + std::to_string(t));
                trace.push(rec);
                observe(t, std::as_const(x), std::as_const(rec));
                if (opt.pad_on_exit) trace.pad_to(T);
                break;
            }
            double gamma;
            if (rule.kind() == StepRule::Kind::open_loop) {
                gamma = difw_step(t, rule.ell());
            } else {
                double cap = std::numeric_limits<double>::infinity();
                for (Eigen::Index i = 0; i < d.size(); ++i)
                    if (d[i] < 0.0) cap = std::min(cap, x[i]);
                gamma = line_minimizer(f, x, d, g, cap);
            }
            const auto support_before = (x.array() > support_threshold).count();
            x += gamma * d;
            const auto support_after = (x.array() > support_threshold).count();
            rec.eta = gamma;
            rec.kind = support_after < support_before ? StepKind::drop : StepKind::fw;
            trace.push(rec);
        }
        check_feasible(x, t + 1);
        observe(t, std::as_const(x), std::as_const(trace.records().back()));
    }
    trace.x_final = x;
    return trace;
}

}  // namespace olfw
