#pragma once

#include "olfw/core.hpp"

#include <bit>
#include <numeric>
#include <optional>

namespace olfw {

struct UniformConvexity {
    double alpha;
    double q;
};

inline double lp_norm(const Point& x, double p) {
    if (p == 1.0) return x.lpNorm<1>();
    if (p == 2.0) return x.norm();
    double m = x.cwiseAbs().maxCoeff();
    if (m == 0.0) return 0.0;
    return m * std::pow((x.cwiseAbs() / m).array().pow(p).sum(), 1.0 / p);
}

class LpBall {
public:
    LpBall(double p, double radius, std::size_t dim) : LpBall(p, radius, Point::Zero(static_cast<Eigen::Index>(dim))) {}
    LpBall(double p, double radius, Point center) : p_(p), r_(radius), c_(std::move(center)) {
        if (!(p >= 1.0) || !std::isfinite(p)) throw config_error("lp ball needs finite p >= 1");
        if (!(radius > 0.0)) throw config_error("lp ball radius must be positive");
        if (c_.size() == 0) throw config_error("lp ball dimension must be positive");
    }

    std::size_t dimension() const { return static_cast<std::size_t>(c_.size()); }
    double p() const { return p_; }
    double radius() const { return r_; }
    const Point& center() const { return c_; }
    std::string name() const { return "lp_ball(p=" + fmt_roundtrip(p_) + ",r=" + fmt_roundtrip(r_) + ",d=" + std::to_string(dimension()) + ")"; }

    Point lmo(const Point& c) const {
        if (c.size() != c_.size()) throw config_error("lmo: dimension mismatch");
        double m = c.cwiseAbs().maxCoeff();
        if (m == 0.0) return c_;
        if (p_ == 1.0) {
            Eigen::Index i = argmax_abs(c);
            Point x = c_;
            x[i] -= c[i] > 0.0 ? r_ : -r_;
            return x;
        }
        // Scale by max|c| so |c|^(q-1) cannot overflow.
        double q = p_ / (p_ - 1.0);
        Eigen::ArrayXd a = c.cwiseAbs().array() / m;
        Eigen::ArrayXd pw = a.pow(q - 1.0);
        double nq = std::pow(a.pow(q).sum(), 1.0 / q);
        Eigen::ArrayXd s = c.array().sign();
        return c_ - r_ * (s * pw / std::pow(nq, q - 1.0)).matrix();
    }

    double norm(const Point& x) const { return lp_norm(x, p_); }

    bool contains(const Point& x, double tol = 1e-10) const {
        return x.size() == c_.size() && x.allFinite() && lp_norm(x - c_, p_) <= r_ + tol;
    }

    double diameter() const {
        if (p_ <= 2.0) return 2.0 * r_;
        return 2.0 * r_ * std::pow(static_cast<double>(dimension()), 0.5 - 1.0 / p_);
    }

    // Euclidean distance from an interior point to the sphere; exact for p = 2, a lower bound otherwise.
    double boundary_distance(const Point& x) const {
        double slack = r_ - lp_norm(x - c_, p_);
        if (slack <= 0.0) return 0.0;
        double d = static_cast<double>(dimension());
        if (p_ == 2.0) return slack;
        if (p_ == 1.0) return slack / std::sqrt(d);
        // ||v||_p <= ||v||_2 for p >= 2, ||v||_p <= d^(1/p-1/2) ||v||_2 for p < 2.
        return p_ > 2.0 ? slack : slack / std::pow(d, 1.0 / p_ - 0.5);
    }

    std::optional<UniformConvexity> uniform_convexity() const {
        if (p_ == 1.0) return std::nullopt;
        if (p_ <= 2.0) return UniformConvexity{(p_ - 1.0) / r_, 2.0};
        // From |g a + (1-g) b|^p <= g|a|^p + (1-g)|b|^p - 2^(2-p) g(1-g)|a-b|^p and ||.||_p >= d^(1/p-1/2) ||.||_2.
        double d = static_cast<double>(dimension());
        double alpha = std::pow(2.0, 3.0 - p_) * std::pow(d, 1.0 - p_ / 2.0) / (p_ * std::pow(r_, p_ - 1.0));
        return UniformConvexity{alpha, p_};
    }

    // Vertex interface, valid for p = 1 only: id 2i is +r e_i, id 2i+1 is -r e_i.
    std::size_t vertex_count() const { return p_ == 1.0 ? 2 * dimension() : 0; }
    std::size_t lmo_vertex(const Point& c) const {
        require_polytope();
        if (c.cwiseAbs().maxCoeff() == 0.0) return 0;
        auto i = static_cast<std::size_t>(argmax_abs(c));
        return c[static_cast<Eigen::Index>(i)] > 0.0 ? 2 * i + 1 : 2 * i;
    }
    Point vertex(std::size_t v) const {
        require_polytope();
        Point x = c_;
        x[static_cast<Eigen::Index>(v / 2)] += v % 2 ? -r_ : r_;
        return x;
    }
    double vertex_dot(std::size_t v, const Point& c) const {
        double ci = c[static_cast<Eigen::Index>(v / 2)];
        return c.dot(c_) + (v % 2 ? -r_ : r_) * ci;
    }
    std::optional<std::size_t> find_vertex(const Point& x) const {
        for (std::size_t v = 0; v < vertex_count(); ++v)
            if ((vertex(v) - x).cwiseAbs().maxCoeff() <= 1e-12) return v;
        return std::nullopt;
    }

private:
    static Eigen::Index argmax_abs(const Point& c) {
        Eigen::Index best = 0;
        for (Eigen::Index i = 1; i < c.size(); ++i)
            if (std::abs(c[i]) > std::abs(c[best])) best = i;
        return best;
    }
    void require_polytope() const {
        if (p_ != 1.0) throw config_error("vertex interface requires p = 1");
    }

    double p_;
    double r_;
    Point c_;
};

inline constexpr double support_threshold = 1e-12;

class ProbabilitySimplex {
public:
    explicit ProbabilitySimplex(std::size_t dim) : d_(dim) {
        if (dim == 0) throw config_error("simplex dimension must be positive");
    }

    std::size_t dimension() const { return d_; }
    std::string name() const { return "simplex(d=" + std::to_string(d_) + ")"; }

    std::size_t lmo_vertex(const Point& c) const {
        Eigen::Index best = 0;
        for (Eigen::Index i = 1; i < c.size(); ++i)
            if (c[i] < c[best]) best = i;
        return static_cast<std::size_t>(best);
    }
    Point lmo(const Point& c) const {
        if (static_cast<std::size_t>(c.size()) != d_) throw config_error("lmo: dimension mismatch");
        return vertex(lmo_vertex(c));
    }

    std::size_t away_vertex(const Point& g, const Point& x) const {
        std::optional<Eigen::Index> best;
        for (Eigen::Index i = 0; i < x.size(); ++i)
            if (x[i] > support_threshold && (!best || g[i] > g[*best])) best = i;
        if (!best) throw solver_error("away oracle: empty support (infeasible iterate)");
        return static_cast<std::size_t>(*best);
    }
    Point away_lmo(const Point& g, const Point& x) const { return vertex(away_vertex(g, x)); }

    std::size_t vertex_count() const { return d_; }
    Point vertex(std::size_t v) const {
        Point e = Point::Zero(static_cast<Eigen::Index>(d_));
        e[static_cast<Eigen::Index>(v)] = 1.0;
        return e;
    }
    double vertex_dot(std::size_t v, const Point& c) const { return c[static_cast<Eigen::Index>(v)]; }
    std::optional<std::size_t> find_vertex(const Point& x) const {
        for (std::size_t v = 0; v < d_; ++v)
            if ((vertex(v) - x).cwiseAbs().maxCoeff() <= 1e-12) return v;
        return std::nullopt;
    }

    Matrix constraint_matrix() const { return Matrix::Ones(1, static_cast<Eigen::Index>(d_)); }
    Point constraint_rhs() const { return Point::Ones(1); }

    bool contains(const Point& x, double tol = 1e-10) const {
        return static_cast<std::size_t>(x.size()) == d_ && x.allFinite() && x.minCoeff() >= -tol &&
               std::abs(x.sum() - 1.0) <= tol;
    }

    double diameter() const { return d_ > 1 ? std::sqrt(2.0) : 0.0; }
    std::optional<UniformConvexity> uniform_convexity() const { return std::nullopt; }

    // Relative-interior radius: distance to the nearest facet within the affine hull.
    double boundary_distance(const Point& x) const {
        if (d_ < 2) return 0.0;
        double d = static_cast<double>(d_);
        return std::max(0.0, x.minCoeff()) * std::sqrt(d / (d - 1.0));
    }

private:
    std::size_t d_;
};

// Euclidean projection onto the probability simplex by sorted thresholding.
inline Point project_onto_simplex(const Point& v) {
    std::vector<double> u(v.data(), v.data() + v.size());
    std::sort(u.begin(), u.end(), std::greater<>());
    double cumsum = 0.0, theta = 0.0;
    for (std::size_t k = 0; k < u.size(); ++k) {
        cumsum += u[k];
        double cand = (cumsum - 1.0) / static_cast<double>(k + 1);
        if (u[k] - cand > 0.0) theta = cand;
    }
    return (v.array() - theta).cwiseMax(0.0).matrix();
}

// min ||x||^2 over the simplex with card(x) <= t, by enumerating supports and solving each KKT system.
inline double jaggi_lower_bound(std::size_t d, std::size_t t) {
    if (t < 1 || t > d) throw config_error("jaggi_lower_bound: need 1 <= t <= d");
    if (d > 24) throw config_error("jaggi_lower_bound: brute force limited to d <= 24");
    double best = std::numeric_limits<double>::infinity();
    for (std::uint32_t mask = 1; mask < (1u << d); ++mask) {
        auto k = static_cast<Eigen::Index>(std::popcount(mask));
        if (static_cast<std::size_t>(k) > t) continue;
        // [2I 1; 1^T 0] [x; nu] = [0; 1]
        Matrix K = Matrix::Zero(k + 1, k + 1);
        K.topLeftCorner(k, k) = 2.0 * Matrix::Identity(k, k);
        K.block(0, k, k, 1).setOnes();
        K.block(k, 0, 1, k).setOnes();
        Point rhs = Point::Zero(k + 1);
        rhs[k] = 1.0;
        Point sol = K.fullPivLu().solve(rhs);
        Point x = sol.head(k);
        if (x.minCoeff() < -1e-12) continue;
        best = std::min(best, x.squaredNorm());
    }
    return best;
}

}  // namespace olfw
