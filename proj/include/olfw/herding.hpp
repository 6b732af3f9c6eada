#pragma once

#include "olfw/core.hpp"
#include "olfw/fw.hpp"

#include <fstream>
#include <numbers>
#include <random>
#include <sstream>

namespace olfw {

inline double bernoulli2(double u) { return (6.0 * u * (u - 1.0) + 1.0) / 6.0; }

// k(y, z) = B2({y - z}) / 2. B2 is symmetric about 1/2, so |y - z| gives the same value
// without the floor and stays exact on dyadic inputs.
inline double kernel_eval(double y, double z) {
    if (!(y >= 0.0 && y <= 1.0 && z >= 0.0 && z <= 1.0)) throw config_error("kernel_eval: arguments must lie in [0, 1]");
    return 0.5 * bernoulli2(std::abs(y - z));
}

// 2 k(y, z) - 1/6 = u^2 - u with u = |y - z|; herding sums are kept in this form.
inline double reduced_kernel(double y, double z) {
    double u = std::abs(y - z);
    return u * u - u;
}

// p(y) = 1 + sum_j a_j cos(2 pi j y) + b_j sin(2 pi j y); index 0 of a is the constant term.
class FourierDensity {
public:
    static FourierDensity uniform() { return FourierDensity({1.0}, {0.0}); }

    FourierDensity(std::vector<double> a, std::vector<double> b) : a_(std::move(a)), b_(std::move(b)) {
        if (a_.empty() || a_.size() != b_.size()) throw config_error("density: coefficient arrays must be nonempty and equal length");
        b_[0] = 0.0;
    }

    // Normalised square of sum_{i=1..n} c_i cos(2 pi i y) + s_i sin(2 pi i y), expanded by
    // product-to-sum identities.
    static FourierDensity from_trig_square(const std::vector<double>& c, const std::vector<double>& s) {
        if (c.size() != s.size() || c.empty()) throw config_error("density: need matching nonempty coefficient lists");
        const int n = static_cast<int>(c.size());
        std::vector<double> A(2 * n + 1, 0.0), B(2 * n + 1, 0.0);
        auto add_cos = [&](int m, double v) { A[std::abs(m)] += v; };
        auto add_sin = [&](int m, double v) { B[std::abs(m)] += m < 0 ? -v : v; };
        for (int i = 1; i <= n; ++i) {
            for (int k = 1; k <= n; ++k) {
                double ci = c[i - 1], si = s[i - 1], ck = c[k - 1], sk = s[k - 1];
                add_cos(i - k, 0.5 * (ci * ck + si * sk));
                add_cos(i + k, 0.5 * (ci * ck - si * sk));
                // cos_i sin_k = (sin(i + k) + sin(k - i)) / 2, and the symmetric term.
                add_sin(i + k, 0.5 * ci * sk);
                add_sin(k - i, 0.5 * ci * sk);
                add_sin(i + k, 0.5 * si * ck);
                add_sin(i - k, 0.5 * si * ck);
            }
        }
        double c0 = A[0];
        if (!(c0 > 0.0)) throw config_error("density: square of the zero polynomial");
        for (auto& v : A) v /= c0;
        for (auto& v : B) v /= c0;
        B[0] = 0.0;
        return FourierDensity(std::move(A), std::move(B));
    }

    static FourierDensity random(std::uint64_t seed, int n) {
        if (n < 1) throw config_error("density: degree must be positive");
        std::mt19937_64 rng(seed);
        std::normal_distribution<double> normal(0.0, 1.0);
        std::vector<double> c(n), s(n);
        for (int i = 0; i < n; ++i) {
            c[i] = normal(rng);
            s[i] = normal(rng);
        }
        return from_trig_square(c, s);
    }

    // Lines "j,a_j,b_j"; j = 0 may restate the constant term, which must be 1.
    static FourierDensity from_stream(std::istream& is) {
        std::vector<double> a{1.0}, b{0.0};
        std::string line;
        while (std::getline(is, line)) {
            if (line.empty() || line[0] == '#') continue;
            std::stringstream ss(line);
            std::string f0, f1, f2;
            if (!std::getline(ss, f0, ',') || !std::getline(ss, f1, ',') || !std::getline(ss, f2))
                throw config_error("density file: expected j,a_j,b_j, got: " + line);
            double jd = parse_double(f0);
            if (jd < 0.0 || jd != std::floor(jd)) throw config_error("density file: bad index " + f0);
            auto j = static_cast<std::size_t>(jd);
            if (j >= a.size()) {
                a.resize(j + 1, 0.0);
                b.resize(j + 1, 0.0);
            }
            a[j] = parse_double(f1);
            b[j] = j == 0 ? 0.0 : parse_double(f2);
        }
        FourierDensity d(std::move(a), std::move(b));
        d.validate();
        return d;
    }
    static FourierDensity from_file(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw config_error("cannot open density file: " + path);
        return from_stream(in);
    }

    std::size_t degree() const { return a_.size() - 1; }
    double a(std::size_t j) const { return a_[j]; }
    double b(std::size_t j) const { return b_[j]; }
    bool is_uniform() const {
        for (std::size_t j = 1; j < a_.size(); ++j)
            if (a_[j] != 0.0 || b_[j] != 0.0) return false;
        return true;
    }

    double operator()(double y) const {
        double v = a_[0];
        for (std::size_t j = 1; j < a_.size(); ++j) {
            double w = 2.0 * std::numbers::pi * static_cast<double>(j) * y;
            v += a_[j] * std::cos(w) + b_[j] * std::sin(w);
        }
        return v;
    }

    void validate() const {
        if (std::abs(a_[0] - 1.0) > 1e-12) throw config_error("density: constant coefficient must be 1");
        for (int i = 0; i <= 10000; ++i)
            if ((*this)(i / 10000.0) < -1e-10) throw config_error("density: negative on the check grid");
    }

    void write(std::ostream& os) const {
        for (std::size_t j = 0; j < a_.size(); ++j)
            os << j << ',' << fmt_roundtrip(a_[j]) << ',' << fmt_roundtrip(b_[j]) << '\n';
    }

private:
    std::vector<double> a_;
    std::vector<double> b_;
};

// mu(z) = sum_j (a_j cos 2 pi j z + b_j sin 2 pi j z) / (2 pi j)^2, with values cached on a grid.
class MeanEmbedding {
public:
    static constexpr int grid_size = 10000;

    explicit MeanEmbedding(FourierDensity p) : p_(std::move(p)), uniform_(p_.is_uniform()) {
        for (std::size_t j = 1; j <= p_.degree(); ++j) {
            double w = 2.0 * std::numbers::pi * static_cast<double>(j);
            self_ += (p_.a(j) * p_.a(j) + p_.b(j) * p_.b(j)) / (2.0 * w * w);
        }
        if (!uniform_) {
            grid_.resize(grid_size + 1);
            for (int i = 0; i <= grid_size; ++i) grid_[i] = (*this)(static_cast<double>(i) / grid_size);
        }
    }

    const FourierDensity& density() const { return p_; }
    bool uniform() const { return uniform_; }

    double operator()(double z) const { return sum([](double a, double b, double c, double s, double w) { return (a * c + b * s) / (w * w); }, z); }
    double derivative(double z) const { return sum([](double a, double b, double c, double s, double w) { return (b * c - a * s) / w; }, z); }
    double second_derivative(double z) const { return sum([](double a, double b, double c, double s, double) { return -(a * c + b * s); }, z); }
    double self_inner() const { return self_; }
    double grid_value(int i) const { return uniform_ ? 0.0 : grid_[static_cast<std::size_t>(i)]; }

private:
    template <class Term>
    double sum(Term term, double z) const {
        double v = 0.0;
        for (std::size_t j = 1; j <= p_.degree(); ++j) {
            double w = 2.0 * std::numbers::pi * static_cast<double>(j);
            v += term(p_.a(j), p_.b(j), std::cos(w * z), std::sin(w * z), w);
        }
        return v;
    }

    FourierDensity p_;
    bool uniform_;
    double self_ = 0.0;
    std::vector<double> grid_;
};

// x = sum_i v_i Phi(y_i) with v_i = w_i / Z. Kernel sums are held in reduced form
// R = sum_ij w_i w_j (u_ij^2 - u_ij), which is exact for dyadic atoms with integer weights.
class HerdingState {
public:
    bool empty() const { return y_.empty(); }
    std::size_t size() const { return y_.size(); }
    const std::vector<double>& atoms() const { return y_; }
    const std::vector<double>& raw_weights() const { return w_; }
    double total_weight() const { return Z_; }
    double weight(std::size_t i) const { return w_[i] / Z_; }

    // sum_i w_i (u_i^2 - u_i), u_i = |y - y_i|, by prefix sums after a binary search.
    double reduced_sum(double y) const {
        std::size_t k = split(y);
        return poly(y, k);
    }
    double reduced_sum_derivative(double y) const {
        std::size_t k = split(y);
        double WL = pw_[k], WR = Z_ - WL;
        return 2.0 * Z_ * y - 2.0 * swy_ - (WL - WR);
    }

    void reset(double y, double mu_y) {
        y_.assign(1, y);
        w_.assign(1, 1.0);
        Z_ = 1.0;
        R_ = 0.0;
        M_ = mu_y;
        rebuild_prefix();
    }

    // Adds weight delta at y. kr = reduced_sum(y) before the update.
    void absorb(double y, double delta, double kr, double mu_y) {
        R_ += 2.0 * delta * kr;
        M_ += delta * mu_y;
        Z_ += delta;
        auto it = std::lower_bound(y_.begin(), y_.end(), y);
        auto pos = static_cast<std::size_t>(it - y_.begin());
        if (it != y_.end() && *it == y)
            w_[pos] += delta;
        else {
            y_.insert(it, y);
            w_.insert(w_.begin() + static_cast<std::ptrdiff_t>(pos), delta);
        }
        if (Z_ > 1e100) {
            double s = 1.0 / Z_;
            for (auto& w : w_) w *= s;
            R_ *= s * s;
            M_ *= s;
            Z_ = 1.0;
        }
        rebuild_prefix();
    }

    double inner_xx() const { return reduced_xx() + 1.0 / 12.0; }
    double reduced_xx() const { return R_ / (2.0 * Z_ * Z_); }
    double inner_mu_x() const { return M_ / Z_; }

    // f(x) = 1/2 ||x - mu||^2 = (6R + Z^2)/(24 Z^2) - M/Z + <mu,mu>/2.
    double objective(double mumu) const {
        if (empty()) return 0.5 * mumu;
        return (6.0 * R_ + Z_ * Z_) / (24.0 * Z_ * Z_) - M_ / Z_ + 0.5 * mumu;
    }

    // Same quantity with all cached sums rebuilt from the atoms.
    double objective_from_scratch(const MeanEmbedding& mu) const {
        if (empty()) return 0.5 * mu.self_inner();
        double R = 0.0, M = 0.0, Z = 0.0;
        for (std::size_t i = 0; i < y_.size(); ++i) {
            Z += w_[i];
            M += w_[i] * mu(y_[i]);
            for (std::size_t j = 0; j < y_.size(); ++j) R += w_[i] * w_[j] * reduced_kernel(y_[i], y_[j]);
        }
        return (6.0 * R + Z * Z) / (24.0 * Z * Z) - M / Z + 0.5 * mu.self_inner();
    }

    // Minimiser over [lo, hi] of the quadratic piece with k atoms to the left, clipped.
    double piece_argmin(std::size_t k, double lo, double hi) const {
        double WL = pw_[k], WR = Z_ - WL;
        double v = (2.0 * swy_ + (WL - WR)) / (2.0 * Z_);
        return std::clamp(v, lo, hi);
    }

    double poly(double y, std::size_t k) const {
        double WL = pw_[k], WR = Z_ - WL;
        double SL = pwy_[k], SR = swy_ - SL;
        return Z_ * y * y - 2.0 * y * swy_ + swy2_ - y * (WL - WR) + (SL - SR);
    }

    // Number of atoms <= y.
    std::size_t split(double y) const {
        return static_cast<std::size_t>(std::upper_bound(y_.begin(), y_.end(), y) - y_.begin());
    }

private:
    void rebuild_prefix() {
        const std::size_t n = y_.size();
        pw_.assign(n + 1, 0.0);
        pwy_.assign(n + 1, 0.0);
        swy2_ = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            pw_[i + 1] = pw_[i] + w_[i];
            pwy_[i + 1] = pwy_[i] + w_[i] * y_[i];
            swy2_ += w_[i] * y_[i] * y_[i];
        }
        swy_ = pwy_[n];
    }

    std::vector<double> y_;
    std::vector<double> w_;
    double Z_ = 0.0;
    double R_ = 0.0;
    double M_ = 0.0;
    std::vector<double> pw_{0.0};
    std::vector<double> pwy_{0.0};
    double swy_ = 0.0;
    double swy2_ = 0.0;
};

// argmin over [0, 1] of g(y) = x(y) - mu(y), smallest minimiser. Equivalent objective:
// reduced_sum(y) / (2Z) - mu(y).
inline double herding_lmo(const HerdingState& s, const MeanEmbedding& mu) {
    if (s.empty()) {
        if (mu.uniform()) return 0.0;
    } else if (mu.uniform()) {
        const auto& y = s.atoms();
        const std::size_t n = y.size();
        const double tol = 1e-13 * s.total_weight();
        double best_y = 0.0, best_v = std::numeric_limits<double>::infinity();
        for (std::size_t k = 0; k <= n; ++k) {
            double lo = k == 0 ? 0.0 : y[k - 1];
            double hi = k == n ? 1.0 : y[k];
            double c = s.piece_argmin(k, lo, hi);
            double v = s.poly(c, s.split(c));
            if (v < best_v - tol) {
                best_v = v;
                best_y = c;
            }
        }
        return best_y;
    }

    const double Z = s.empty() ? 1.0 : s.total_weight();
    auto g = [&](double y) { return (s.empty() ? 0.0 : s.reduced_sum(y) / (2.0 * Z)) - mu(y); };
    auto dg = [&](double y) { return (s.empty() ? 0.0 : s.reduced_sum_derivative(y) / (2.0 * Z)) - mu.derivative(y); };

    // Grid sweep.
    const int N = MeanEmbedding::grid_size;
    int best = 0;
    double best_v = std::numeric_limits<double>::infinity();
    std::size_t k = 0;
    for (int i = 0; i <= N; ++i) {
        double y = static_cast<double>(i) / N;
        double v = -mu.grid_value(i);
        if (!s.empty()) {
            while (k < s.size() && s.atoms()[k] <= y) ++k;
            v += s.poly(y, k) / (2.0 * Z);
        }
        if (v < best_v) {
            best_v = v;
            best = i;
        }
    }

    // Safeguarded Newton on g' inside the neighbouring cells.
    double yb = static_cast<double>(best) / N;
    double lo = std::max(0.0, static_cast<double>(best - 1) / N);
    double hi = std::min(1.0, static_cast<double>(best + 1) / N);
    double d0 = dg(yb);
    double a, b;
    if (d0 < 0.0) {
        a = yb;
        b = hi;
    } else {
        a = lo;
        b = yb;
    }
    double candidate = yb;
    if (dg(a) < 0.0 && dg(b) > 0.0) {
        double y = 0.5 * (a + b);
        for (int it = 0; it < 30; ++it) {
            double gy = dg(y);
            if (std::abs(gy) <= 1e-12) break;
            if (gy < 0.0) a = y; else b = y;
            double h2 = 1.0 - mu.second_derivative(y);
            double yn = h2 > 0.0 ? y - gy / h2 : 0.5 * (a + b);
            if (!(yn > a && yn < b)) yn = 0.5 * (a + b);
            if (b - a <= 1e-15) break;
            y = yn;
        }
        if (g(y) < g(candidate)) candidate = y;
    }
    return candidate;
}

struct HerdingResult {
    RunTrace trace;
    HerdingState state;
};

// FW on f(x) = 1/2 ||x - mu||^2 in the Bernoulli-kernel RKHS, starting from x_0 = 0.
// The first step always has eta = 1, so x_1 = Phi(y_1).
// The observer sees (t, state) after step t is applied.
template <class Observer = no_observer>
HerdingResult herding_run(const MeanEmbedding& mu, const StepRule& rule, std::size_t T, Observer&& observe = {}) {
    if (T < 1) throw config_error("herding_run: need T >= 1");
    if (!rule.resolved()) throw config_error("herding_run: constant step size not resolved");
    HerdingResult res;
    auto& trace = res.trace;
    auto& s = res.state;
    trace.meta.algorithm = "herding";
    trace.meta.rule = rule.to_string();
    trace.meta.region = "bernoulli_rkhs";
    trace.meta.objective = mu.uniform() ? "uniform" : "fourier";
    const double mumu = mu.self_inner();

    for (std::size_t t = 0;; ++t) {
        const double y = herding_lmo(s, mu);
        const double mu_y = mu(y);
        TraceRecord rec;
        rec.t = t;
        rec.h = s.objective(mumu);
        if (s.empty()) {
            rec.fw_gap = mu_y;
        } else {
            const double kr = s.reduced_sum(y);
            const double Z = s.total_weight();
            double denom = s.reduced_xx() - kr / Z;  // ||Phi(y) - x||^2
            rec.fw_gap = s.reduced_xx() - kr / (2.0 * Z) - s.inner_mu_x() + mu_y;
            if (t == T) {
                trace.push(rec);
                break;
            }
            double eta = 0.0, delta = 0.0;
            switch (rule.kind()) {
            case StepRule::Kind::open_loop:
                eta = rule.open_loop_value(t);
                delta = Z * rule.ell() / static_cast<double>(t);
                break;
            case StepRule::Kind::line_search:
            case StepRule::Kind::short_step:  // L = 1, so both coincide
                eta = denom > 0.0 ? std::clamp(rec.fw_gap / denom, 0.0, 1.0) : (rec.fw_gap > 0.0 ? 1.0 : 0.0);
                delta = eta < 1.0 ? eta / (1.0 - eta) * Z : 0.0;
                break;
            case StepRule::Kind::constant:
                eta = rule.eta();
                delta = eta < 1.0 ? eta / (1.0 - eta) * Z : 0.0;
                break;
            }
            rec.eta = eta;
            trace.push(rec);
            if (eta == 1.0)
                s.reset(y, mu_y);
            else if (eta > 0.0)
                s.absorb(y, delta, kr, mu_y);
            observe(t, std::as_const(s));
            continue;
        }
        rec.eta = 1.0;
        trace.push(rec);
        s.reset(y, mu_y);
        observe(t, std::as_const(s));
    }
    return res;
}

inline FourierDensity parse_density(std::string_view spec, std::uint64_t seed) {
    if (spec == "uniform") return FourierDensity::uniform();
    if (spec.starts_with("fourier:")) return FourierDensity::from_file(std::string(spec.substr(8)));
    if (spec == "random") return FourierDensity::random(seed, 3);
    if (spec.starts_with("random:")) return FourierDensity::random(seed, static_cast<int>(parse_double(spec.substr(7))));
    throw config_error("unknown density: " + std::string(spec));
}

}  // namespace olfw
