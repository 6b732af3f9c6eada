#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <concepts>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <map>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace olfw {

using Point = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

struct config_error : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct solver_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Thrown by short-step when x == p; callers treat it as convergence.
struct degenerate_direction : std::runtime_error {
    degenerate_direction() : std::runtime_error("degenerate direction: x == p") {}
};

inline bool all_finite(const Point& x) { return x.allFinite(); }

inline std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.16e", v);
    return buf;
}

// Shortest text that parses back to the same double.
inline std::string fmt_roundtrip(double v) {
    char buf[40];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

inline double parse_double(std::string_view s) {
    std::string tmp(s);
    char* end = nullptr;
    double v = std::strtod(tmp.c_str(), &end);
    if (end == tmp.c_str() || *end != '\0') throw config_error("not a number: " + tmp);
    return v;
}

template <class F>
concept objective_oracle = requires(const F& f, const Point& x) {
    { f.value(x) } -> std::convertible_to<double>;
    { f.gradient(x) } -> std::convertible_to<Point>;
    { f.smoothness() } -> std::convertible_to<double>;
    { f.optimal_value() } -> std::convertible_to<double>;
    { f.primal_gap(x) } -> std::convertible_to<double>;
};

// Objectives with constant Hessian; curvature(d) = <d, H d>.
template <class F>
concept quadratic_objective = objective_oracle<F> && requires(const F& f, const Point& d) {
    { f.curvature(d) } -> std::convertible_to<double>;
};

template <class R>
concept feasible_region = requires(const R& r, const Point& c, const Point& x) {
    { r.dimension() } -> std::convertible_to<std::size_t>;
    { r.lmo(c) } -> std::convertible_to<Point>;
    { r.diameter() } -> std::convertible_to<double>;
    { r.contains(x, 1e-10) } -> std::convertible_to<bool>;
    { r.name() } -> std::convertible_to<std::string>;
};

// Finite vertex set addressed by integer ids.
template <class R>
concept polytope_region = feasible_region<R> && requires(const R& r, const Point& c, std::size_t v) {
    { r.vertex_count() } -> std::convertible_to<std::size_t>;
    { r.lmo_vertex(c) } -> std::convertible_to<std::size_t>;
    { r.vertex(v) } -> std::convertible_to<Point>;
    { r.vertex_dot(v, c) } -> std::convertible_to<double>;
};

// 0/1 vertices and {x >= 0, Mx = rhs} description.
template <class R>
concept simplex_like_region = polytope_region<R> && requires(const R& r, const Point& g, const Point& x) {
    { r.away_lmo(g, x) } -> std::convertible_to<Point>;
    { r.constraint_matrix() } -> std::convertible_to<Matrix>;
    { r.constraint_rhs() } -> std::convertible_to<Point>;
};

class StepRule {
public:
    enum class Kind { open_loop, line_search, short_step, constant };

    static StepRule open_loop(int ell) {
        if (ell < 1) throw config_error("open-loop ell must be a positive integer");
        StepRule r;
        r.kind_ = Kind::open_loop;
        r.ell_ = ell;
        return r;
    }
    static StepRule line_search() { StepRule r; r.kind_ = Kind::line_search; return r; }
    static StepRule short_step() { StepRule r; r.kind_ = Kind::short_step; return r; }
    // eta == 0 leaves the constant unresolved; the harness fills it from instance data.
    static StepRule constant(double eta = 0.0) {
        if (eta != 0.0 && !(eta > 0.0 && eta <= 1.0)) throw config_error("constant step must lie in (0, 1]");
        StepRule r;
        r.kind_ = Kind::constant;
        r.eta_ = eta;
        return r;
    }

    // openloop:<ell> | linesearch | shortstep | constant | constant:<eta>
    static StepRule parse(std::string_view s) {
        auto colon = s.find(':');
        std::string_view head = s.substr(0, colon);
        std::string_view arg = colon == std::string_view::npos ? std::string_view{} : s.substr(colon + 1);
        if (head == "openloop") {
            int ell = 0;
            auto res = std::from_chars(arg.data(), arg.data() + arg.size(), ell);
            if (arg.empty() || res.ec != std::errc{} || res.ptr != arg.data() + arg.size())
                throw config_error("bad open-loop rule: " + std::string(s));
            return open_loop(ell);
        }
        if (head == "linesearch" && arg.empty()) return line_search();
        if (head == "shortstep" && arg.empty()) return short_step();
        if (head == "constant") return arg.empty() ? constant() : constant(parse_double(arg));
        throw config_error("unknown step rule: " + std::string(s));
    }

    std::string to_string() const {
        switch (kind_) {
        case Kind::open_loop: return "openloop:" + std::to_string(ell_);
        case Kind::line_search: return "linesearch";
        case Kind::short_step: return "shortstep";
        case Kind::constant: return eta_ == 0.0 ? "constant" : "constant:" + fmt_roundtrip(eta_);
        }
        return {};
    }

    Kind kind() const { return kind_; }
    int ell() const { return ell_; }
    double eta() const { return eta_; }
    bool resolved() const { return kind_ != Kind::constant || eta_ != 0.0; }

    double open_loop_value(std::size_t t) const {
        return static_cast<double>(ell_) / (static_cast<double>(t) + ell_);
    }

    friend bool operator==(const StepRule&, const StepRule&) = default;

private:
    Kind kind_ = Kind::open_loop;
    int ell_ = 1;
    double eta_ = 0.0;
};

inline double constant_step_eta(double alpha, double lambda, double L) { return alpha * lambda / (2.0 * L); }

// argmin over [0, max_step] of phi(eta) = f(x + eta d); smallest point within tolerance.
template <objective_oracle F>
double line_minimizer(const F& f, const Point& x, const Point& d, const Point& grad, double max_step) {
    double slope = grad.dot(d);
    if (slope >= 0.0) return 0.0;
    if constexpr (quadratic_objective<F>) {
        double curv = f.curvature(d);
        if (curv <= 0.0) return max_step;
        return std::clamp(-slope / curv, 0.0, max_step);
    } else {
        // Convex phi: bisect on the sign of phi'(e) = <grad f(x + e d), d>.
        auto dphi = [&](double e) { return f.gradient(Point(x + e * d)).dot(d); };
        if (dphi(max_step) <= 0.0) return max_step;
        double a = 0.0, b = max_step;
        while (b - a > 1e-12) {
            double m = 0.5 * (a + b);
            if (m <= a || m >= b) break;
            (dphi(m) < 0.0 ? a : b) = m;
        }
        return 0.5 * (a + b);
    }
}

inline double short_step_length(const Point& grad, const Point& d, double L, double max_step) {
    double nd = d.squaredNorm();
    if (nd == 0.0) throw degenerate_direction{};
    return std::clamp(-grad.dot(d) / (L * nd), 0.0, max_step);
}

// FW step length along p - x.
template <objective_oracle F>
double step_length(const StepRule& rule, std::size_t t, const F& f, const Point& x, const Point& p,
                   const Point& grad) {
    switch (rule.kind()) {
    case StepRule::Kind::open_loop: return rule.open_loop_value(t);
    case StepRule::Kind::constant:
        if (!(rule.eta() > 0.0 && rule.eta() <= 1.0)) throw config_error("constant step must lie in (0, 1]");
        return rule.eta();
    case StepRule::Kind::short_step: return short_step_length(grad, p - x, f.smoothness(), 1.0);
    case StepRule::Kind::line_search: return line_minimizer(f, x, Point(p - x), grad, 1.0);
    }
    return 0.0;
}

enum class StepKind { fw, away, drop, non_progress };

inline const char* to_string(StepKind k) {
    switch (k) {
    case StepKind::fw: return "fw";
    case StepKind::away: return "away";
    case StepKind::drop: return "drop";
    case StepKind::non_progress: return "non_progress";
    }
    return "?";
}

struct TraceRecord {
    std::size_t t = 0;
    double h = 0.0;
    double fw_gap = 0.0;
    double eta = 0.0;
    StepKind kind = StepKind::fw;
    double grad_norm = 0.0;
    std::size_t active_set_size = 0;
    bool progress = true;
};

struct TraceMetadata {
    std::string algorithm;
    std::string rule;
    std::string region;
    std::string objective;
    std::uint64_t seed = 0;
    bool active_set_columns = false;
    bool early_exit = false;
    std::size_t exit_iteration = 0;
    bool fstar_certified = true;
    std::map<std::string, std::string> extra;
};

class RunTrace {
public:
    TraceMetadata meta;
    Point x_final;

    // Clamps tiny negative gaps; anything below -tol is a reference-optimum bug.
    void push(TraceRecord r, double negative_tol = 1e-9) {
        if (!std::isfinite(r.h)) throw solver_error("non-finite primal gap at t=" + std::to_string(r.t));
        if (r.h < -negative_tol)
            throw solver_error("primal gap " + fmt_double(r.h) + " below zero at t=" + std::to_string(r.t));
        r.h = std::max(r.h, 0.0);
        records_.push_back(r);
    }

    // Repeat the final record up to t = T after an early exit.
    void pad_to(std::size_t T) {
        if (records_.empty()) return;
        meta.early_exit = true;
        meta.exit_iteration = records_.back().t;
        TraceRecord last = records_.back();
        last.eta = 0.0;
        records_.back().eta = 0.0;
        while (records_.back().t < T) {
            last.t = records_.back().t + 1;
            records_.push_back(last);
        }
    }

    const std::vector<TraceRecord>& records() const { return records_; }
    std::size_t size() const { return records_.size(); }
    const TraceRecord& operator[](std::size_t i) const { return records_[i]; }

    std::vector<double> gaps() const {
        std::vector<double> h;
        h.reserve(records_.size());
        for (const auto& r : records_) h.push_back(r.h);
        return h;
    }

    void write_csv(std::ostream& os) const {
        os << "t,h,h_min_prefix,fw_gap,eta,step_kind";
        if (meta.active_set_columns) os << ",active_set_size,progress";
        os << '\n';
        double running = std::numeric_limits<double>::infinity();
        for (const auto& r : records_) {
            running = std::min(running, r.h);
            os << r.t << ',' << fmt_double(r.h) << ',' << fmt_double(running) << ',' << fmt_double(r.fw_gap) << ','
               << fmt_double(r.eta) << ',' << to_string(r.kind);
            if (meta.active_set_columns) os << ',' << r.active_set_size << ',' << (r.progress ? 1 : 0);
            os << '\n';
        }
    }

private:
    std::vector<TraceRecord> records_;
};

// Reads the t and h columns of a trace CSV.
inline std::vector<double> read_trace_gaps(std::istream& is) {
    std::string line;
    if (!std::getline(is, line)) throw config_error("empty trace file");
    std::vector<std::string> header;
    {
        std::size_t start = 0;
        while (true) {
            auto comma = line.find(',', start);
            header.push_back(line.substr(start, comma - start));
            if (comma == std::string::npos) break;
            start = comma + 1;
        }
    }
    auto it = std::find(header.begin(), header.end(), "h");
    if (it == header.end()) throw config_error("trace file has no h column");
    auto col = static_cast<std::size_t>(it - header.begin());
    std::vector<double> h;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::size_t start = 0;
        for (std::size_t c = 0; c < col; ++c) {
            start = line.find(',', start);
            if (start == std::string::npos) throw config_error("short trace row: " + line);
            ++start;
        }
        auto end = line.find(',', start);
        h.push_back(parse_double(std::string_view(line).substr(start, end - start)));
    }
    return h;
}

// eta_t = 4/(t+4), also at the negative indices used by the bound.
inline double recurrence_eta(long t) { return 4.0 / (static_cast<double>(t) + 4.0); }

struct RecurrenceParams {
    double A = 1.0;
    double B = 1.0;
    double C = 1.0;
    double psi = 0.0;
};

// h_S, ..., h_T of h_{t+1} = (1 - eta/2) h - eta A C_t h^(1-psi) + eta^2 B C_t, floored at 0.
// Ct is indexed by absolute t and must cover S..T-1.
inline std::vector<double> simulate_recurrence(const RecurrenceParams& p, std::span<const double> Ct, std::size_t S,
                                               double hS, std::size_t T) {
    if (!(p.A > 0.0) || p.B < 0.0 || !(p.C > 0.0)) throw config_error("recurrence: A, C must be positive, B >= 0");
    if (p.psi < 0.0 || p.psi > 0.5) throw config_error("recurrence: psi must lie in [0, 1/2]");
    if (T < S || hS < 0.0) throw config_error("recurrence: need T >= S and hS >= 0");
    if (Ct.size() < T) throw config_error("recurrence: C_t sequence too short");
    std::vector<double> h{hS};
    h.reserve(T - S + 1);
    double cur = hS;
    for (std::size_t t = S; t < T; ++t) {
        double c = Ct[t];
        if (c < 0.0 || c > p.C) throw config_error("recurrence: C_t outside [0, C]");
        double eta = recurrence_eta(static_cast<long>(t));
        cur = (1.0 - eta / 2.0) * cur - eta * p.A * c * std::pow(cur, 1.0 - p.psi) + eta * eta * p.B * c;
        cur = std::max(cur, 0.0);
        h.push_back(cur);
    }
    return h;
}

inline double recurrence_bound(const RecurrenceParams& p, std::size_t S, double hS, std::size_t t) {
    double e = 1.0 / (1.0 - p.psi);
    double et2 = recurrence_eta(static_cast<long>(t) - 2);
    double eS1 = recurrence_eta(static_cast<long>(S) - 1);
    double first = std::pow(et2 / eS1, e) * hS;
    double second = std::pow(et2 * p.B / p.A, e) + et2 * et2 * p.B * p.C;
    return std::max(first, second);
}

}  // namespace olfw
