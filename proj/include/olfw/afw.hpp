#pragma once

#include "olfw/fw.hpp"

namespace olfw {

// Vertex ids with positive convex weights, kept sorted by id.
class ActiveSet {
public:
    struct Atom {
        std::size_t id;
        double weight;
    };

    static constexpr double drop_threshold = 1e-12;

    void reset(std::size_t id) { atoms_.assign(1, Atom{id, 1.0}); }

    std::size_t size() const { return atoms_.size(); }
    const std::vector<Atom>& atoms() const { return atoms_; }

    double weight(std::size_t id) const {
        auto it = find(id);
        return it != atoms_.end() && it->id == id ? it->weight : 0.0;
    }
    bool contains(std::size_t id) const { return weight(id) > 0.0; }

    double weight_sum() const {
        double s = 0.0;
        for (const auto& a : atoms_) s += a.weight;
        return s;
    }

    void scale(double s) {
        for (auto& a : atoms_) a.weight *= s;
    }

    void add(std::size_t id, double delta) {
        auto it = find(id);
        if (it != atoms_.end() && it->id == id)
            it->weight += delta;
        else
            atoms_.insert(it, Atom{id, delta});
    }

    void remove(std::size_t id) {
        auto it = find(id);
        if (it != atoms_.end() && it->id == id) atoms_.erase(it);
    }

    // Removes atoms at or below the threshold; returns how many left.
    std::size_t prune() {
        auto before = atoms_.size();
        std::erase_if(atoms_, [](const Atom& a) { return a.weight <= drop_threshold; });
        return before - atoms_.size();
    }

    template <polytope_region R>
    Point reconstruct(const R& region) const {
        Point x = Point::Zero(static_cast<Eigen::Index>(region.dimension()));
        for (const auto& a : atoms_) x += a.weight * region.vertex(a.id);
        return x;
    }

    // argmax over atoms of <g, v>, smallest id on ties.
    template <polytope_region R>
    std::size_t away_vertex(const R& region, const Point& g) const {
        if (atoms_.empty()) throw solver_error("away oracle: empty active set");
        std::size_t best = atoms_.front().id;
        double best_val = region.vertex_dot(best, g);
        for (const auto& a : atoms_) {
            double v = region.vertex_dot(a.id, g);
            if (v > best_val) {
                best = a.id;
                best_val = v;
            }
        }
        return best;
    }

private:
    std::vector<Atom>::iterator find(std::size_t id) {
        return std::lower_bound(atoms_.begin(), atoms_.end(), id, [](const Atom& a, std::size_t v) { return a.id < v; });
    }
    std::vector<Atom>::const_iterator find(std::size_t id) const {
        return std::lower_bound(atoms_.begin(), atoms_.end(), id, [](const Atom& a, std::size_t v) { return a.id < v; });
    }

    std::vector<Atom> atoms_;
};

// Observers see (t, x, record t, S) after step t is applied. Away-step FW. OpenLoop rules run the weakly open-loop variant: the step is eta_{l_t} with
// l_t counting progress steps. LineSearch and ShortStep search over [0, eta_max].
template <objective_oracle F, polytope_region R, class Observer = no_observer>
RunTrace afw_run(const F& f, const R& region, const StepRule& rule, std::size_t x0_vertex, std::size_t T,
                 const RunOptions& opt = {}, Observer&& observe = {}) {
    if (T < 1) throw config_error("afw_run: need T >= 1");
    if (rule.kind() == StepRule::Kind::constant) throw config_error("afw_run: constant step size not supported");
    if (x0_vertex >= region.vertex_count()) throw config_error("afw_run: x0 is not a vertex");
    RunTrace trace;
    detail::fill_metadata(trace.meta, "afw", rule, f, region);
    trace.meta.active_set_columns = true;

    const bool open_loop = rule.kind() == StepRule::Kind::open_loop;
    const double L = f.smoothness();
    const double delta = region.diameter();
    const double Ld2 = L * delta * delta;

    ActiveSet S;
    S.reset(x0_vertex);
    Point x = region.vertex(x0_vertex);
    std::size_t progress_count = 0;

    for (std::size_t t = 0;; ++t) {
        const double fx = f.value(x);
        if (!std::isfinite(fx)) throw solver_error("afw_run: non-finite objective at t=" + std::to_string(t));
        const Point g = f.gradient(x);
        const std::size_t fw_id = region.lmo_vertex(g);
        const std::size_t away_id = S.away_vertex(region, g);
        const double gx = g.dot(x);
        const double g_fw = region.vertex_dot(fw_id, g);
        const double g_away = region.vertex_dot(away_id, g);

        TraceRecord rec;
        rec.t = t;
        rec.h = opt.track_gap ? f.primal_gap(x) : 0.0;
        rec.fw_gap = gx - g_fw;
        rec.grad_norm = g.norm();
        rec.active_set_size = S.size();

        const bool converged = opt.early_exit && rec.fw_gap <= opt.gap_tolerance * (1.0 + std::abs(fx));
        if (converged || t == T) {
            trace.push(rec);
            observe(t, std::as_const(x), std::as_const(rec), std::as_const(S));
            if (converged && t < T && opt.pad_on_exit) trace.pad_to(T);
            break;
        }

        const bool fw_direction = g_fw - gx <= gx - g_away;
        Point d;
        double eta_max = 1.0;
        double lambda_a = 0.0;
        if (fw_direction) {
            d = region.vertex(fw_id) - x;
        } else {
            lambda_a = S.weight(away_id);
            if (lambda_a >= 1.0) throw solver_error("afw_run: away step from a singleton active set");
            d = x - region.vertex(away_id);
            eta_max = lambda_a / (1.0 - lambda_a);
        }

        double gamma = 0.0;
        double eta_l = 0.0;
        bool degenerate = false;
        switch (rule.kind()) {
        case StepRule::Kind::open_loop:
            eta_l = static_cast<double>(rule.ell()) / (static_cast<double>(progress_count) + rule.ell());
            gamma = std::min(eta_l, eta_max);
            break;
        case StepRule::Kind::line_search: gamma = line_minimizer(f, x, d, g, eta_max); break;
        case StepRule::Kind::short_step:
            try {
                gamma = short_step_length(g, d, L, eta_max);
            } catch (const degenerate_direction&) {
                degenerate = true;
            }
            break;
        case StepRule::Kind::constant: break;
        }
        if (degenerate) {
            trace.push(rec);
            observe(t, std::as_const(x), std::as_const(rec), std::as_const(S));
            if (opt.pad_on_exit) trace.pad_to(T);
            break;
        }

        bool progress = true;
        if (open_loop) {
            progress = (eta_l - gamma) * (g_away - g_fw) <= (eta_l * eta_l - gamma * gamma) * Ld2;
            if (progress) ++progress_count;
        }

        const std::size_t before = S.size();
        if (fw_direction) {
            if (gamma == 1.0) {
                S.reset(fw_id);
            } else {
                S.scale(1.0 - gamma);
                S.add(fw_id, gamma);
            }
        } else {
            S.scale(1.0 + gamma);
            if (gamma == eta_max)
                S.remove(away_id);  // exact drop, decided before rounding can leave a residue
            else
                S.add(away_id, -gamma);
        }
        S.prune();

        if (fw_direction)
            rec.kind = StepKind::fw;
        else if (S.size() < before)
            rec.kind = StepKind::drop;
        else
            rec.kind = progress ? StepKind::away : StepKind::non_progress;
        rec.eta = gamma;
        rec.progress = progress;
        trace.push(rec);

        x += gamma * d;
        if (!region.contains(x, opt.feasibility_tol))
            throw solver_error("afw_run: iterate left the region at t=" + std::to_string(t + 1) + ", x=" +
                               detail::dump_point(x));
        observe(t, std::as_const(x), std::as_const(rec), std::as_const(S));
    }
    trace.meta.extra["progress_steps"] = std::to_string(progress_count);
    trace.x_final = x;
    return trace;
}

template <objective_oracle F, polytope_region R, class Observer = no_observer>
RunTrace afw_run(const F& f, const R& region, const StepRule& rule, const Point& x0, std::size_t T,
                 const RunOptions& opt = {}, Observer&& observe = {}) {
    auto id = region.find_vertex(x0);
    if (!id) throw config_error("afw_run: x0 is not a vertex");
    return afw_run(f, region, rule, *id, T, opt, std::forward<Observer>(observe));
}

}  // namespace olfw
