#include "jumplab/quadrature.hpp"

#include "jumplab/error.hpp"

#include <algorithm>
#include <cmath>

namespace jumplab {

namespace {

// int_{u0}^{u1} exp(c u) du, stable as c -> 0.
double exp_integral(double c, double u0, double u1) {
    const double width = u1 - u0;
    if (std::abs(c * width) < 1e-10) {
        return std::exp(c * u0) * width * (1.0 + 0.5 * c * width);
    }
    return std::exp(c * u0) * std::expm1(c * width) / c;
}

}  // namespace

std::vector<EnvelopePiece> q_inv_semigroup_sq_envelope(const SpectralModel& model, double t) {
    require(t > 0.0, "time must be positive");
    const int d = model.dim();
    std::vector<double> a(static_cast<std::size_t>(d));
    std::vector<double> b(static_cast<std::size_t>(d));
    for (int k = 0; k < d; ++k) {
        a[static_cast<std::size_t>(k)] = -2.0 * std::log(model.q()(k));
        b[static_cast<std::size_t>(k)] = 2.0 * model.gamma()(k);
    }
    // Dominant line at u = 0: largest intercept, then smallest slope.
    std::size_t cur = 0;
    for (std::size_t k = 1; k < a.size(); ++k) {
        if (a[k] > a[cur] || (a[k] == a[cur] && b[k] < b[cur])) {
            cur = k;
        }
    }
    std::vector<EnvelopePiece> pieces;
    double u = 0.0;
    while (u < t) {
        double next = t;
        std::size_t successor = cur;
        for (std::size_t k = 0; k < a.size(); ++k) {
            if (b[k] < b[cur]) {
                const double cross = (a[cur] - a[k]) / (b[cur] - b[k]);
                if (cross > u && cross < next) {
                    next = cross;
                    successor = k;
                }
            }
        }
        pieces.push_back({u, next, a[cur], b[cur]});
        u = next;
        if (successor == cur) {
            break;
        }
        cur = successor;
    }
    return pieces;
}

double q_inv_semigroup_sq_integral(const SpectralModel& model, double t) {
    double total = 0.0;
    for (const auto& p : q_inv_semigroup_sq_envelope(model, t)) {
        total += std::exp(p.log_scale) * exp_integral(-p.rate, p.from, p.to);
    }
    return total;
}

double q_growth(const SpectralModel& model, double t) { return q_inv_semigroup_sq_integral(model, t) / t; }

double gamma_t(const SpectralModel& model, double grad_f_sup, double t, int outer_intervals) {
    require(t > 0.0, "time must be positive");
    require(outer_intervals >= 16, "too few quadrature intervals");
    const double kappa = model.gamma_min() - grad_f_sup;
    const auto pieces = q_inv_semigroup_sq_envelope(model, t);

    // inner(s) = int_0^s N(u) exp(-2 kappa (s - u)) du
    auto inner = [&](double s) {
        double total = 0.0;
        for (const auto& p : pieces) {
            if (p.from >= s) {
                break;
            }
            const double hi = std::min(p.to, s);
            total += std::exp(p.log_scale - 2.0 * kappa * s) * exp_integral(2.0 * kappa - p.rate, p.from, hi);
        }
        return total;
    };

    std::vector<double> grid;
    grid.reserve(static_cast<std::size_t>(outer_intervals) + 64);
    for (int j = 0; j <= outer_intervals; ++j) {
        grid.push_back(t * static_cast<double>(j) / outer_intervals);
    }
    const double first = t / outer_intervals;
    for (int j = 1; j <= 48; ++j) {
        grid.push_back(first * std::pow(0.5, 0.25 * j));
    }
    for (const auto& p : pieces) {
        grid.push_back(p.to);
    }
    std::sort(grid.begin(), grid.end());
    grid.erase(std::unique(grid.begin(), grid.end()), grid.end());

    double total = 0.0;
    double prev = 0.0;
    for (std::size_t j = 1; j < grid.size(); ++j) {
        const double s = grid[j];
        const double next = s * inner(s);
        total += 0.5 * (s - grid[j - 1]) * (prev + next);
        prev = next;
    }
    return total;
}

}  // namespace jumplab
