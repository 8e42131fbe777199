#include "jumplab/malliavin.hpp"

#include "jumplab/error.hpp"
#include "jumplab/overloaded.hpp"

#include <array>
#include <cmath>
#include <limits>

namespace jumplab {

namespace {

void check_times(std::span<const double> times) {
    require(!times.empty(), "at least one evaluation time is needed");
    for (std::size_t k = 0; k < times.size(); ++k) {
        require(times[k] > 0.0 && std::isfinite(times[k]), "evaluation times must be positive");
        if (k > 0) {
            require(times[k] > times[k - 1], "evaluation times must be increasing");
        }
    }
}

// Linear part of one IBP weight term: s <z, Q^{-1} v> + <grad log rho(z), v>.
double weight_term(const SpectralModel& model, const JumpDensity& density, const HVector& z, const HVector& v,
                   CmSign sign) {
    return linear_sign(sign) * (z.array() * v.array() / model.q().array()).sum() +
           density.grad_log_rho_dot(z, v);
}

}  // namespace

HVector compensator_direction(const SpectralModel& model, const JumpDensity& density, CmSign sign) {
    const CompensatorMoments cm = compensator_moments(density, model);
    const HVector lin = linear_sign(sign) * model.q_inverse(cm.m_rho);
    HVector w = lin + cm.g_rho;
    const double scale = lin.norm() + cm.g_rho.norm();
    if (w.norm() <= 1e-14 * scale) {
        w.setZero();
    }
    return w;
}

HVector perturbation_at(const PerturbationField& V, const JacobianFlow* flow, double s) {
    return std::visit(Overloaded{[](const ConstantDir& c) -> HVector { return c.v; },
                                 [&](const JacobianDir& j) -> HVector {
                                     require(flow != nullptr, "JacobianDir needs a Jacobian flow");
                                     return flow->at(s) * j.xi;
                                 }},
                      V);
}

double admissibility_sup(const SpectralModel& model, const PerturbationField& V, const JacobianFlow* flow) {
    if (const auto* c = std::get_if<ConstantDir>(&V)) {
        return model.q_inverse(c->v).norm();
    }
    require(flow != nullptr, "JacobianDir needs a Jacobian flow");
    const HVector& xi = std::get<JacobianDir>(V).xi;
    double best = 0.0;
    for (const auto& jac : flow->mats) {
        best = std::max(best, model.q_inverse(jac * xi).norm());
    }
    return best;
}

double TestFunction::value(const HVector& x) const {
    return std::visit(Overloaded{[&](const CosineF& f) { return std::cos(f.a.dot(x) + f.theta); },
                                 [](const ConstantF& f) { return f.c; },
                                 [&](const LinearF& f) { return f.a.dot(x); }},
                      variant_);
}

HVector TestFunction::grad(const HVector& x) const {
    return std::visit(Overloaded{[&](const CosineF& f) -> HVector { return -std::sin(f.a.dot(x) + f.theta) * f.a; },
                                 [&](const ConstantF&) -> HVector { return HVector::Zero(x.size()); },
                                 [](const LinearF& f) -> HVector { return f.a; }},
                      variant_);
}

double TestFunction::grad_dot(const HVector& x, const HVector& v) const {
    return std::visit(Overloaded{[&](const CosineF& f) { return -std::sin(f.a.dot(x) + f.theta) * f.a.dot(v); },
                                 [](const ConstantF&) { return 0.0; },
                                 [&](const LinearF& f) { return f.a.dot(v); }},
                      variant_);
}

double TestFunction::sup_norm() const {
    return std::visit(Overloaded{[](const CosineF&) { return 1.0; },
                                 [](const ConstantF& f) { return std::abs(f.c); },
                                 [](const LinearF&) { return std::numeric_limits<double>::infinity(); }},
                      variant_);
}

HVector l1_derivative(const JumpPath& path, const JacobianFlow& flow, const PerturbationField& V, double t) {
    require(!flow.mats.empty(), "empty Jacobian flow");
    const auto d = flow.mats.front().rows();
    HVector out = HVector::Zero(d);
    for (const auto& e : path.events) {
        if (e.time > t) {
            break;
        }
        out += jacobian_transition(flow, e.time, t) * perturbation_at(V, &flow, e.time);
    }
    return out;
}

L1DerivativeCheck l1_derivative_fd_check(const Dynamics& dyn, const JumpPath& path, const HVector& x0,
                                         const PerturbationField& V, double t, double eps) {
    require(eps >= 1e-6 && eps <= 1e-2, "eps must lie in [1e-6, 1e-2]");
    const Trajectory base = solve_mild(dyn.model, dyn.drift, path, x0, dyn.dt, t);
    const JacobianFlow flow = jacobian_flow(dyn.model, dyn.drift, base);
    JumpPath shifted = path;
    for (auto& e : shifted.events) {
        if (e.time > t) {
            break;
        }
        e.mark += eps * perturbation_at(V, &flow, e.time);
    }
    const Trajectory moved = solve_mild(dyn.model, dyn.drift, shifted, x0, dyn.dt, t);
    const std::size_t last = base.size() - 1;
    return {(moved.state(last) - base.state(last)) / eps, l1_derivative(path, flow, V, t)};
}

double martingale_weight(const SpectralModel& model, const JumpDensity& density, const JumpPath& path,
                         const PerturbationField& V, double t, const JacobianFlow* flow, CmSign sign) {
    const HVector w = compensator_direction(model, density, sign);
    double sum = 0.0;
    for (const auto& e : path.events) {
        if (e.time > t) {
            break;
        }
        sum += weight_term(model, density, e.mark, perturbation_at(V, flow, e.time), sign);
    }
    double compensator = 0.0;
    if (const auto* c = std::get_if<ConstantDir>(&V)) {
        compensator = t * w.dot(c->v);
    } else if (!w.isZero(0.0)) {
        require(flow != nullptr, "JacobianDir needs a Jacobian flow");
        const HVector& xi = std::get<JacobianDir>(V).xi;
        const std::size_t end = flow->index_of(t);
        double prev = w.dot(flow->mats[0] * xi);
        for (std::size_t j = 1; j <= end; ++j) {
            const double next = w.dot(flow->mats[j] * xi);
            compensator += 0.5 * (flow->times[j] - flow->times[j - 1]) * (prev + next);
            prev = next;
        }
    }
    return sum - compensator;
}

IbpResult ibp_check(const Dynamics& dyn, const TestFunction& f, const ConstantDir& V, double t,
                    const McOptions& opts, std::string_view experiment) {
    require(t > 0.0, "time must be positive");
    require(V.v.size() == dyn.model.dim(), "direction has the wrong dimension");
    const HVector w = compensator_direction(dyn.model, dyn.density, dyn.sign);
    const double compensator = t * w.dot(V.v);
    const int d = dyn.model.dim();
    const EstimatorResult both = monte_carlo(opts, experiment, 2, [&](Stream& stream, Eigen::VectorXd& out) {
        const JumpPath path = sample_jump_path(dyn.density, dyn.model, dyn.secondary, t, stream);
        const HVector value = path.value_at(t, d);
        double m = 0.0;
        int n = 0;
        for (const auto& e : path.events) {
            m += weight_term(dyn.model, dyn.density, e.mark, V.v, dyn.sign);
            ++n;
        }
        m -= compensator;
        out(0) = static_cast<double>(n) * f.grad_dot(value, V.v);
        out(1) = -f.value(value) * m;
    });
    return {both.channel(0), both.channel(1)};
}

EstimatorResult p1_semigroup(const Dynamics& dyn, const TestFunction& f, const HVector& x, double t,
                             const McOptions& opts, std::string_view experiment) {
    require(t > 0.0, "time must be positive");
    require(x.size() == dyn.model.dim(), "initial state has the wrong dimension");
    const std::array<double, 1> stops{t};
    return monte_carlo(opts, experiment, 1, [&](Stream& stream, Eigen::VectorXd& out) {
        const JumpPath path = sample_jump_path(dyn.density, dyn.model, dyn.secondary, t, stream);
        MildStepper stepper(dyn.model, dyn.drift, dyn.dt);
        HVector state = x;
        int n = 0;
        walk_path(
            path, dyn.dt, t, !dyn.drift.is_zero(), stops, [&](double h) { stepper.step(state, h); },
            [&](const JumpEvent& e, bool primary) {
                state += e.mark;
                n += primary ? 1 : 0;
            },
            [&](double, bool at_stop) {
                if (at_stop && n > 0) {
                    out(0) = f.value(state);
                }
            });
    });
}

EstimatorResult bismut_gradient(const Dynamics& dyn, const TestFunction& f, const HVector& x,
                                const HVector& xi, std::span<const double> times, const McOptions& opts,
                                std::string_view experiment) {
    check_times(times);
    require(x.size() == dyn.model.dim() && xi.size() == dyn.model.dim(), "x and xi need the model dimension");
    const HVector w = compensator_direction(dyn.model, dyn.density, dyn.sign);
    const bool has_compensator = !w.isZero(0.0);
    // Linear dynamics with no compensator are exact between events.
    const bool uniform = !dyn.drift.is_zero() || has_compensator;
    const double horizon = times.back();
    const auto channels = static_cast<int>(times.size());
    return monte_carlo(opts, experiment, channels, [&](Stream& stream, Eigen::VectorXd& out) {
        const JumpPath path = sample_jump_path(dyn.density, dyn.model, dyn.secondary, horizon, stream);
        MildStepper stepper(dyn.model, dyn.drift, dyn.dt);
        HVector state = x;
        HVector v = xi;
        double sum = 0.0;
        double compensator = 0.0;
        double c_prev = has_compensator ? w.dot(v) : 0.0;
        int n = 0;
        int k = 0;
        walk_path(
            path, dyn.dt, horizon, uniform, times,
            [&](double h) {
                stepper.step_tangent(state, v, h);
                if (has_compensator) {
                    const double c_next = w.dot(v);
                    compensator += 0.5 * h * (c_prev + c_next);
                    c_prev = c_next;
                }
            },
            [&](const JumpEvent& e, bool primary) {
                if (primary) {
                    sum += weight_term(dyn.model, dyn.density, e.mark, v, dyn.sign);
                    ++n;
                }
                state += e.mark;
            },
            [&](double, bool at_stop) {
                if (!at_stop) {
                    return;
                }
                if (n > 0) {
                    out(k) = -f.value(state) * (sum - compensator) / static_cast<double>(n);
                }
                ++k;
            });
    });
}

EstimatorResult fd_gradient(const Dynamics& dyn, const TestFunction& f, const HVector& x, const HVector& xi,
                            std::span<const double> times, double eps, const McOptions& opts,
                            std::string_view experiment) {
    check_times(times);
    require(eps >= 1e-4 && eps <= 1e-1, "eps must lie in [1e-4, 1e-1]");
    require(x.size() == dyn.model.dim() && xi.size() == dyn.model.dim(), "x and xi need the model dimension");
    const double horizon = times.back();
    const auto channels = static_cast<int>(times.size());
    return monte_carlo(opts, experiment, channels, [&](Stream& stream, Eigen::VectorXd& out) {
        const JumpPath path = sample_jump_path(dyn.density, dyn.model, dyn.secondary, horizon, stream);
        MildStepper stepper(dyn.model, dyn.drift, dyn.dt);
        HVector up = x + eps * xi;
        HVector down = x - eps * xi;
        int n = 0;
        int k = 0;
        walk_path(
            path, dyn.dt, horizon, !dyn.drift.is_zero(), times,
            [&](double h) {
                stepper.step(up, h);
                stepper.step(down, h);
            },
            [&](const JumpEvent& e, bool primary) {
                up += e.mark;
                down += e.mark;
                n += primary ? 1 : 0;
            },
            [&](double, bool at_stop) {
                if (!at_stop) {
                    return;
                }
                if (n > 0) {
                    out(k) = (f.value(up) - f.value(down)) / (2.0 * eps);
                }
                ++k;
            });
    });
}

EstimatorResult pathwise_gradient(const Dynamics& dyn, const TestFunction& f, const HVector& x,
                                  const HVector& xi, std::span<const double> times, const McOptions& opts,
                                  std::string_view experiment) {
    check_times(times);
    require(x.size() == dyn.model.dim() && xi.size() == dyn.model.dim(), "x and xi need the model dimension");
    const double horizon = times.back();
    const auto channels = static_cast<int>(times.size());
    return monte_carlo(opts, experiment, channels, [&](Stream& stream, Eigen::VectorXd& out) {
        const JumpPath path = sample_jump_path(dyn.density, dyn.model, dyn.secondary, horizon, stream);
        MildStepper stepper(dyn.model, dyn.drift, dyn.dt);
        HVector state = x;
        HVector v = xi;
        int n = 0;
        int k = 0;
        walk_path(
            path, dyn.dt, horizon, !dyn.drift.is_zero(), times,
            [&](double h) { stepper.step_tangent(state, v, h); },
            [&](const JumpEvent& e, bool primary) {
                state += e.mark;
                n += primary ? 1 : 0;
            },
            [&](double, bool at_stop) {
                if (!at_stop) {
                    return;
                }
                if (n > 0) {
                    out(k) = f.grad_dot(state, v);
                }
                ++k;
            });
    });
}

PoissonMoment poisson_inverse_square_moment(double lambda_t) {
    require(lambda_t > 0.0 && std::isfinite(lambda_t), "lambda t must be positive");
    // Terms exp(n log x - x - lgamma(n + 1)) / n^2, summed until past the mode
    // and negligible.
    const double log_x = std::log(lambda_t);
    double sum = 0.0;
    for (int n = 1;; ++n) {
        const double nn = static_cast<double>(n);
        const double term = std::exp(nn * log_x - lambda_t - std::lgamma(nn + 1.0)) / (nn * nn);
        sum += term;
        if (nn > lambda_t && term <= 1e-18 * sum) {
            break;
        }
        if (n > 10'000'000) {
            throw NumericalError("Poisson moment series did not converge");
        }
    }
    return {sum, 6.0 / (lambda_t * lambda_t)};
}

}  // namespace jumplab
