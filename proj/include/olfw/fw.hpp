#pragma once

#include "olfw/core.hpp"
#include "olfw/regions.hpp"

#include <sstream>
#include <utility>

namespace olfw {

struct RunOptions {
    double gap_tolerance = 1e-14;
    bool early_exit = true;
    bool track_gap = true;  // off for reference runs, where f* is not known yet
    bool pad_on_exit = true;
    double feasibility_tol = 1e-9;
};

struct no_observer {
    template <class... Args>
    void operator()(Args&&...) const {}
};

namespace detail {
inline std::string dump_point(const Point& x, std::size_t max_entries = 8) {
    std::ostringstream os;
    os << '(';
    for (Eigen::Index i = 0; i < x.size() && static_cast<std::size_t>(i) < max_entries; ++i)
        os << (i ? ", " : "") << fmt_double(x[i]);
    if (static_cast<std::size_t>(x.size()) > max_entries) os << ", ...";
    os << ')';
    return os.str();
}

template <class F, class R>
void fill_metadata(TraceMetadata& m, const char* algo, const StepRule& rule, const F& f, const R& region) {
    m.algorithm = algo;
    m.rule = rule.to_string();
    m.region = region.name();
    if constexpr (requires { f.id; }) m.objective = f.id;
    if constexpr (requires { f.seed; }) m.seed = f.seed;
    if constexpr (requires { f.has_reference(); f.reference().certified; })
        m.fstar_certified = !f.has_reference() || f.reference().certified;
}
}  // namespace detail

// Algorithm 1. Records t = 0..T; x_{t+1} = (1 - eta_t) x_t + eta_t p_t.
// The observer sees (t, x, record t) after step t is applied.
template <objective_oracle F, feasible_region R, class Observer = no_observer>
RunTrace fw_run(const F& f, const R& region, const StepRule& rule, const Point& x0, std::size_t T,
                const RunOptions& opt = {}, Observer&& observe = {}) {
    if (T < 1) throw config_error("fw_run: need T >= 1");
    if (!rule.resolved()) throw config_error("fw_run: constant step size not resolved");
    if (!region.contains(x0, opt.feasibility_tol)) throw config_error("fw_run: infeasible x0");
    RunTrace trace;
    detail::fill_metadata(trace.meta, "fw", rule, f, region);

    Point x = x0;
    for (std::size_t t = 0;; ++t) {
        const double fx = f.value(x);
        if (!std::isfinite(fx)) throw solver_error("fw_run: non-finite objective at t=" + std::to_string(t));
        const Point g = f.gradient(x);
        const Point p = region.lmo(g);
        TraceRecord rec;
        rec.t = t;
        rec.h = opt.track_gap ? f.primal_gap(x) : 0.0;
        rec.fw_gap = g.dot(x - p);
        rec.grad_norm = g.norm();

        const bool converged = opt.early_exit && rec.fw_gap <= opt.gap_tolerance * (1.0 + std::abs(fx));
        if (converged || t == T) {
            trace.push(rec);
            observe(t, std::as_const(x), std::as_const(rec));
            if (converged && t < T && opt.pad_on_exit) trace.pad_to(T);
            break;
        }
        double eta = 0.0;
        try {
            eta = step_length(rule, t, f, x, p, g);
        } catch (const degenerate_direction&) {
            trace.push(rec);
            observe(t, std::as_const(x), std::as_const(rec));
            if (opt.pad_on_exit) trace.pad_to(T);
            break;
        }
        rec.eta = eta;
        trace.push(rec);

        x += eta * (p - x);
        if (!region.contains(x, opt.feasibility_tol))
            throw solver_error("fw_run: iterate left the region at t=" + std::to_string(t + 1) + ", x=" +
                               detail::dump_point(x));
        observe(t, std::as_const(x), std::as_const(rec));
    }
    trace.x_final = x;
    return trace;
}

struct ConstantRuleSetup {
    double alpha;
    double lambda;
    double eta;
};

// lambda = 0.9 ||grad f(x*)||, to be certified against the trace afterwards.
template <class F, class R>
ConstantRuleSetup constant_rule_setup(const F& f, const R& region) {
    auto uc = region.uniform_convexity();
    if (!uc) throw config_error("constant rule needs a uniformly convex region");
    double lambda = 0.9 * f.gradient(f.reference().xstar).norm();
    if (!(lambda > 0.0)) throw config_error("constant rule needs a nonvanishing gradient at x*");
    double eta = std::min(1.0, constant_step_eta(uc->alpha, lambda, f.smoothness()));
    return {uc->alpha, lambda, eta};
}

inline double min_gradient_norm(const RunTrace& trace) {
    double m = std::numeric_limits<double>::infinity();
    for (const auto& r : trace.records()) m = std::min(m, r.grad_norm);
    return m;
}

}  // namespace olfw
