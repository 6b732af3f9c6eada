#pragma once

#include "olfw/fw.hpp"
#include "olfw/objectives.hpp"
#include "olfw/reference.hpp"

#include <optional>

namespace olfw {

inline std::vector<double> min_prefix(std::span<const double> h) {
    std::vector<double> out(h.begin(), h.end());
    for (std::size_t i = 1; i < out.size(); ++i) out[i] = std::min(out[i], out[i - 1]);
    return out;
}

struct RateEstimate {
    std::size_t window_start = 0;
    std::size_t window_len = 0;
    double slope = 0.0;  // minus the log-log regression slope
    double r_squared = 0.0;
};

// OLS of log h_s on log(s + 1) over s = t..t+window.
inline RateEstimate local_rate(std::span<const double> h, std::size_t t, std::size_t window = 100) {
    if (window < 1 || t + window >= h.size()) throw config_error("local_rate: window exceeds trace");
    RateEstimate r{t, window, 0.0, 0.0};
    const std::size_t n = window + 1;
    double sx = 0, sy = 0;
    for (std::size_t s = t; s <= t + window; ++s) {
        if (!(h[s] > 0.0)) {
            r.slope = std::numeric_limits<double>::infinity();
            r.r_squared = 1.0;
            return r;
        }
        sx += std::log(static_cast<double>(s) + 1.0);
        sy += std::log(h[s]);
    }
    const double mx = sx / n, my = sy / n;
    double sxx = 0, sxy = 0, syy = 0;
    for (std::size_t s = t; s <= t + window; ++s) {
        double dx = std::log(static_cast<double>(s) + 1.0) - mx;
        double dy = std::log(h[s]) - my;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    double beta = sxy / sxx;
    r.slope = -beta;
    r.r_squared = syy > 0.0 ? std::clamp(sxy * sxy / (sxx * syy), 0.0, 1.0) : 1.0;
    return r;
}

// Rate over an explicit index range [first, last].
inline RateEstimate fit_rate(std::span<const double> h, std::size_t first, std::size_t last) {
    if (last <= first) throw config_error("fit_rate: empty range");
    return local_rate(h, first, last - first);
}

inline std::optional<std::size_t> burn_in_end(std::span<const double> h, double threshold = 1.8,
                                              std::size_t window = 100) {
    if (h.size() <= window) throw config_error("burn_in_end: trace shorter than window");
    for (std::size_t t = 0; t + window < h.size(); ++t)
        if (local_rate(h, t, window).slope >= threshold) return t;
    return std::nullopt;
}

struct ContourCell {
    std::size_t d;
    std::size_t t;
    double slope;
    double r_squared;
};

struct ContourResult {
    std::vector<ContourCell> cells;
    std::vector<std::pair<std::size_t, std::string>> failures;
};

// h_t trace of FW OpenLoop(4) from e1 on the family instance at dimension d.
inline std::vector<double> contour_trace(const InstanceSpec& family, std::size_t d, std::size_t iters) {
    InstanceSpec spec = family;
    spec.region.dimension = d;
    Instance inst = generate_instance(spec);
    inst.objective.set_reference(reference_optimum(inst.objective, inst.region));
    return std::visit(
        [&](const auto& reg) {
            Point x0 = Point::Zero(static_cast<Eigen::Index>(d));
            if constexpr (std::is_same_v<std::decay_t<decltype(reg)>, LpBall>) {
                x0 = reg.center();
                x0[0] += reg.radius();
            } else {
                x0[0] = 1.0;
            }
            return fw_run(inst.objective, reg, StepRule::open_loop(4), x0, iters).gaps();
        },
        inst.region);
}

inline ContourResult rate_contour(const InstanceSpec& family, const std::vector<std::size_t>& dims, std::size_t iters,
                                  std::size_t window = 100) {
    if (!std::is_sorted(dims.begin(), dims.end())) throw config_error("rate_contour: dims must be ascending");
    ContourResult out;
    for (std::size_t d : dims) {
        try {
            auto h = contour_trace(family, d, iters);
            for (std::size_t t = 0; t + window < h.size(); ++t) {
                auto r = local_rate(h, t, window);
                out.cells.push_back({d, t, r.slope, r.r_squared});
            }
        } catch (const std::exception& e) {
            out.failures.emplace_back(d, e.what());
        }
    }
    return out;
}

inline void write_contour_csv(std::ostream& os, const ContourResult& c) {
    os << "d,t,slope,r2\n";
    for (const auto& cell : c.cells)
        os << cell.d << ',' << cell.t << ',' << fmt_double(cell.slope) << ',' << fmt_double(cell.r_squared) << '\n';
}

}  // namespace olfw
