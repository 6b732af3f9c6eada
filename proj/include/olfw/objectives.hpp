#pragma once

#include "olfw/core.hpp"
#include "olfw/regions.hpp"

#include <optional>
#include <random>
#include <utility>
#include <variant>

namespace olfw {

struct EigenExtremes {
    double max;
    double min;  // 0 when singular
};

// Power iteration for the top eigenvalue, inverse iteration (Cholesky) for the bottom one.
inline EigenExtremes eigen_extremes(const Matrix& Q, double rel_tol = 1e-13, int max_iter = 200000) {
    const Eigen::Index n = Q.rows();
    if (n == 0 || Q.cols() != n) throw config_error("eigen_extremes: need a nonempty square matrix");
    Point v(n);
    for (Eigen::Index i = 0; i < n; ++i) v[i] = 1.0 + static_cast<double>(i) / static_cast<double>(n);
    v.normalize();

    auto rayleigh_iterate = [&](auto&& apply) {
        Point x = v;
        double prev = 0.0, rq = 0.0;
        int stable = 0;
        for (int k = 0; k < max_iter; ++k) {
            Point y = apply(x);
            rq = x.dot(y);
            double ny = y.norm();
            if (ny == 0.0) return 0.0;
            x = y / ny;
            if (std::abs(rq - prev) <= rel_tol * std::abs(rq)) {
                if (++stable >= 3) break;
            } else {
                stable = 0;
            }
            prev = rq;
        }
        return rq;
    };

    double lmax = rayleigh_iterate([&](const Point& x) { return Point(Q * x); });
    if (lmax <= 0.0) return {0.0, 0.0};
    Eigen::LLT<Matrix> llt(Q);
    if (llt.info() != Eigen::Success) return {lmax, 0.0};
    double inv = rayleigh_iterate([&](const Point& x) { return Point(llt.solve(x)); });
    double lmin = inv > 0.0 ? 1.0 / inv : 0.0;
    if (lmin < 1e-12 * lmax) lmin = 0.0;
    return {lmax, lmin};
}

struct ReferenceOptimum {
    double fstar = 0.0;
    Point xstar;
    bool certified = true;
    double lower_bound = 0.0;
    std::string method;
};

// f(x) = 1/2 ||A x - b||^2, stored with Q = A^T A and q = A^T b. The scaled-identity form
// f(x) = c/2 ||x - xhat||^2 avoids all d x d work.
class QuadraticObjective {
public:
    static QuadraticObjective from_matrix(Matrix A, Point b) {
        if (A.rows() != b.size()) throw config_error("objective: A and b disagree in size");
        QuadraticObjective f;
        f.Q_ = A.transpose() * A;
        f.q_ = A.transpose() * b;
        f.A_ = std::move(A);
        f.b_ = std::move(b);
        auto ext = eigen_extremes(f.Q_);
        f.L_ = ext.max;
        f.alpha_ = ext.min;
        return f;
    }

    static QuadraticObjective scaled_identity(double c, Point xhat) {
        if (!(c > 0.0)) throw config_error("objective: scale must be positive");
        QuadraticObjective f;
        f.identity_ = true;
        f.c_ = c;
        f.xhat_ = std::move(xhat);
        f.L_ = c;
        f.alpha_ = c;
        return f;
    }

    std::size_t dimension() const { return static_cast<std::size_t>(identity_ ? xhat_.size() : Q_.rows()); }
    bool is_identity() const { return identity_; }
    double identity_scale() const { return c_; }
    Matrix hessian() const {
        if (identity_) return c_ * Matrix::Identity(xhat_.size(), xhat_.size());
        return Q_;
    }

    double value(const Point& x) const {
        if (identity_) return 0.5 * c_ * (x - xhat_).squaredNorm();
        return 0.5 * (A_ * x - b_).squaredNorm();
    }
    Point gradient(const Point& x) const {
        if (identity_) return c_ * (x - xhat_);
        return Q_ * x - q_;
    }
    double curvature(const Point& d) const {
        if (identity_) return c_ * d.squaredNorm();
        return d.dot(Q_ * d);
    }

    double smoothness() const { return L_; }
    double strong_convexity() const { return alpha_; }
    // Hoelderian error bound (mu, theta) implied by strong convexity.
    std::optional<std::pair<double, double>> heb() const {
        if (alpha_ <= 0.0) return std::nullopt;
        return std::make_pair(std::sqrt(2.0 / alpha_), 0.5);
    }

    double optimal_value() const { return ref_ ? ref_->fstar : 0.0; }
    bool has_reference() const { return ref_.has_value(); }
    const ReferenceOptimum& reference() const {
        if (!ref_) throw solver_error("objective has no reference optimum");
        return *ref_;
    }
    void set_reference(ReferenceOptimum r) {
        grad_star_ = gradient(r.xstar);
        offset_ = value(r.xstar) - r.fstar;
        ref_ = std::move(r);
    }

    // Exact expansion around x*; f(x) - f* loses everything to cancellation near the optimum.
    double primal_gap(const Point& x) const {
        if (!ref_) return value(x);
        Point dx = x - ref_->xstar;
        return grad_star_.dot(dx) + 0.5 * curvature(dx) + offset_;
    }

    // Unconstrained minimiser (least-norm when singular).
    Point unconstrained_minimizer() const {
        if (identity_) return xhat_;
        return A_.completeOrthogonalDecomposition().solve(b_);
    }

    std::optional<double> gradient_lower_bound;
    std::string id;
    std::uint64_t seed = 0;

private:
    QuadraticObjective() = default;

    bool identity_ = false;
    double c_ = 1.0;
    Point xhat_;
    Matrix A_;
    Point b_;
    Matrix Q_;
    Point q_;
    double L_ = 0.0;
    double alpha_ = 0.0;
    std::optional<ReferenceOptimum> ref_;
    Point grad_star_;
    double offset_ = 0.0;
};

enum class Location { interior, boundary, exterior, face };
enum class MatrixKind { identity, random };
enum class RegionKind { lp_ball, simplex };

inline const char* to_string(Location l) {
    switch (l) {
    case Location::interior: return "interior";
    case Location::boundary: return "boundary";
    case Location::exterior: return "exterior";
    case Location::face: return "face";
    }
    return "?";
}
inline Location parse_location(std::string_view s) {
    if (s == "interior") return Location::interior;
    if (s == "boundary") return Location::boundary;
    if (s == "exterior") return Location::exterior;
    if (s == "face") return Location::face;
    throw config_error("unknown location: " + std::string(s));
}
inline const char* to_string(MatrixKind m) { return m == MatrixKind::identity ? "identity" : "random"; }
inline MatrixKind parse_matrix_kind(std::string_view s) {
    if (s == "identity") return MatrixKind::identity;
    if (s == "random") return MatrixKind::random;
    throw config_error("unknown matrix kind: " + std::string(s));
}
inline const char* to_string(RegionKind k) { return k == RegionKind::lp_ball ? "lp_ball" : "simplex"; }
inline RegionKind parse_region_kind(std::string_view s) {
    if (s == "lp_ball") return RegionKind::lp_ball;
    // The probability simplex is the only simplex-like polytope shipped.
    if (s == "simplex" || s == "slp") return RegionKind::simplex;
    throw config_error("unknown region kind: " + std::string(s));
}

struct RegionSpec {
    RegionKind kind = RegionKind::simplex;
    double p = 2.0;
    double radius = 1.0;
    std::size_t dimension = 100;
    friend bool operator==(const RegionSpec&, const RegionSpec&) = default;
};

struct InstanceSpec {
    Location location = Location::interior;
    double rho = 0.0;
    RegionSpec region;
    MatrixKind matrix = MatrixKind::random;
    std::uint64_t seed = 1;
    friend bool operator==(const InstanceSpec&, const InstanceSpec&) = default;
};

using Region = std::variant<LpBall, ProbabilitySimplex>;

inline Region make_region(const RegionSpec& r) {
    if (r.dimension == 0) throw config_error("region dimension must be positive");
    if (r.kind == RegionKind::simplex) return ProbabilitySimplex(r.dimension);
    return LpBall(r.p, r.radius, r.dimension);
}

inline double region_diameter(const Region& r) {
    return std::visit([](const auto& reg) { return reg.diameter(); }, r);
}

struct Instance {
    InstanceSpec spec;
    QuadraticObjective objective;
    Region region;
    Point target;              // the declared unconstrained minimiser
    std::vector<Eigen::Index> null_coords;  // coordinates spanning null(A), empty if nonsingular
};

inline std::string instance_id(const InstanceSpec& s) {
    std::string id = std::string(to_string(s.region.kind)) + "_d" + std::to_string(s.region.dimension);
    if (s.region.kind == RegionKind::lp_ball) id += "_p" + fmt_roundtrip(s.region.p) + "_r" + fmt_roundtrip(s.region.radius);
    id += std::string("_") + to_string(s.location);
    if (s.location == Location::face) id += "_rho" + fmt_roundtrip(s.rho);
    id += std::string("_") + to_string(s.matrix) + "_seed" + std::to_string(s.seed);
    return id;
}

// 1bar: zeros on the first ceil(d/2) coordinates, ones after.
inline Point tail_indicator(std::size_t d) {
    Point v = Point::Zero(static_cast<Eigen::Index>(d));
    v.tail(static_cast<Eigen::Index>(d / 2)).setOnes();
    return v;
}

inline Instance generate_instance(const InstanceSpec& spec) {
    const std::size_t d = spec.region.dimension;
    const auto n = static_cast<Eigen::Index>(d);
    if (d == 0) throw config_error("instance dimension must be positive");
    if (spec.location == Location::face && spec.region.kind != RegionKind::simplex)
        throw config_error("face(rho) location requires a simplex region");

    std::mt19937_64 rng(spec.seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    Matrix G;
    if (spec.matrix == MatrixKind::random) {
        G.resize(n, n);
        for (Eigen::Index i = 0; i < n; ++i)
            for (Eigen::Index j = 0; j < n; ++j) G(i, j) = normal(rng);
    }

    const bool singular = spec.location == Location::exterior && spec.region.kind == RegionKind::lp_ball &&
                          spec.matrix == MatrixKind::random;
    const Eigen::Index zeroed = singular ? n - n / 2 : 0;  // last ceil(d/2) coordinates

    Point xhat;
    if (spec.region.kind == RegionKind::lp_ball) {
        Point u(n);
        for (Eigen::Index i = 0; i < n; ++i) u[i] = normal(rng);
        if (zeroed > 0) {
            if (zeroed == n) throw config_error("exterior singular instance needs d >= 2");
            u.tail(zeroed).setZero();
        }
        u /= lp_norm(u, spec.region.p);
        double scale = spec.location == Location::interior ? 0.5 : spec.location == Location::boundary ? 1.0 : 2.0;
        xhat = scale * spec.region.radius * u;
    } else {
        switch (spec.location) {
        case Location::interior: xhat = Point::Constant(n, 1.0 / static_cast<double>(d)); break;
        case Location::boundary:
            if (d < 2) throw config_error("boundary simplex instance needs d >= 2");
            xhat = tail_indicator(d) / static_cast<double>(d / 2);
            break;
        case Location::exterior:
            if (d < 2) throw config_error("exterior simplex instance needs d >= 2");
            xhat = 2.0 * tail_indicator(d);
            break;
        case Location::face:
            if (!(spec.rho > 0.0)) throw config_error("face(rho) needs rho > 0");
            xhat = spec.rho * tail_indicator(d);
            break;
        }
    }

    std::optional<QuadraticObjective> f;
    std::vector<Eigen::Index> null_coords;
    if (spec.matrix == MatrixKind::identity) {
        f = QuadraticObjective::scaled_identity(1.0, xhat);
    } else {
        Matrix A = Matrix::Identity(n, n) + (0.3 / std::sqrt(static_cast<double>(d))) * G;
        if (zeroed > 0) {
            A.rightCols(zeroed).setZero();
            for (Eigen::Index i = n - zeroed; i < n; ++i) null_coords.push_back(i);
        }
        Point b = A * xhat;
        f = QuadraticObjective::from_matrix(std::move(A), std::move(b));
    }
    f->id = instance_id(spec);
    f->seed = spec.seed;
    return Instance{spec, std::move(*f), make_region(spec.region), std::move(xhat), std::move(null_coords)};
}

// Position of the unconstrained minimiser set relative to the region. With null(A) spanned by
// coordinate vectors, the set is xhat + span(e_Z); for the lp ball its closest point to the
// centre zeroes the Z coordinates.
inline Location classify_target(const Instance& inst, double tol = 1e-8) {
    Point x = inst.target;
    for (auto i : inst.null_coords) x[i] = 0.0;
    return std::visit(
        [&](const auto& reg) -> Location {
            using R = std::decay_t<decltype(reg)>;
            if constexpr (std::is_same_v<R, LpBall>) {
                double nx = lp_norm(x - reg.center(), reg.p());
                if (nx < reg.radius() - tol) return Location::interior;
                if (nx <= reg.radius() + tol) return Location::boundary;
                return Location::exterior;
            } else {
                if (!reg.contains(x, tol)) return Location::exterior;
                return x.minCoeff() > tol ? Location::interior : Location::boundary;
            }
        },
        inst.region);
}

}  // namespace olfw
