#include "jumplab/convergence.hpp"

#include "jumplab/error.hpp"
#include "jumplab/quadrature.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <string>

namespace jumplab {

namespace {

void check_checkpoints(std::span<const double> checkpoints) {
    require(!checkpoints.empty(), "at least one checkpoint is needed");
    for (std::size_t k = 0; k < checkpoints.size(); ++k) {
        require(checkpoints[k] > 0.0, "checkpoints must be positive");
        if (k > 0) {
            require(checkpoints[k] > checkpoints[k - 1], "checkpoints must be increasing");
        }
    }
}

void require_dissipative(const Dynamics& dyn) {
    const double lip = dyn.drift.lip_bound();
    if (!(dyn.model.gamma_min() > lip)) {
        std::ostringstream msg;
        msg << "(H3/H4) convergence needs gamma_1 > ||F||_Lip, got gamma_1 = " << dyn.model.gamma_min()
            << " and ||F||_Lip = " << lip;
        throw DomainError(msg.str());
    }
}

// States at each checkpoint for n samples, laid out [sample][checkpoint][coordinate].
struct CheckpointStates {
    int dim = 0;
    std::size_t checkpoints = 0;
    std::vector<double> x;
    std::vector<double> y;

    const double* at(const std::vector<double>& v, std::size_t i, std::size_t j) const {
        return v.data() + (i * checkpoints + j) * static_cast<std::size_t>(dim);
    }
};

CheckpointStates simulate_pairs(const Dynamics& dyn, const HVector& x0, const HVector& y0,
                                std::span<const double> checkpoints, const McOptions& opts,
                                std::string_view experiment, TvCoupling coupling) {
    const int d = dyn.model.dim();
    const std::size_t n = opts.samples;
    const std::size_t m = checkpoints.size();
    CheckpointStates out{d, m, std::vector<double>(n * m * static_cast<std::size_t>(d)),
                         std::vector<double>(n * m * static_cast<std::size_t>(d))};
    const double horizon = checkpoints.back();
    const bool uniform = !dyn.drift.is_zero();
    const std::uint32_t id_x = experiment_id(experiment);
    const std::uint32_t id_y = experiment_id(std::string(experiment) + "/independent-y");

    auto store = [&](std::vector<double>& dst, std::size_t i, std::size_t j, const HVector& v) {
        std::copy(v.data(), v.data() + d, dst.data() + (i * m + j) * static_cast<std::size_t>(d));
    };

    parallel_for(n, opts.workers, [&](std::size_t i) {
        MildStepper stepper(dyn.model, dyn.drift, dyn.dt);
        Stream sx = opts.rng.stream(id_x, i, kPrimaryNoise);
        const JumpPath px = sample_jump_path(dyn.density, dyn.model, dyn.secondary, horizon, sx);
        if (coupling == TvCoupling::Coupled) {
            HVector x = x0;
            HVector gap = x0 - y0;
            std::size_t j = 0;
            walk_path(
                px, dyn.dt, horizon, uniform, checkpoints, [&](double h) { stepper.step_coupled(x, gap, h); },
                [&](const JumpEvent& e, bool) { x += e.mark; },
                [&](double, bool at_stop) {
                    if (at_stop) {
                        store(out.x, i, j, x);
                        store(out.y, i, j, x - gap);
                        ++j;
                    }
                });
            return;
        }
        Stream sy = opts.rng.stream(id_y, i, kPrimaryNoise);
        const JumpPath py = sample_jump_path(dyn.density, dyn.model, dyn.secondary, horizon, sy);
        auto run = [&](const JumpPath& path, HVector state, std::vector<double>& dst) {
            std::size_t j = 0;
            walk_path(
                path, dyn.dt, horizon, uniform, checkpoints, [&](double h) { stepper.step(state, h); },
                [&](const JumpEvent& e, bool) { state += e.mark; },
                [&](double, bool at_stop) {
                    if (at_stop) {
                        store(dst, i, j, state);
                        ++j;
                    }
                });
        };
        run(px, x0, out.x);
        run(py, y0, out.y);
    });
    return out;
}

struct Dictionary {
    std::vector<HVector> a;
    std::vector<double> theta;
};

Dictionary make_dictionary(int dim, const TvOptions& tv, const McOptions& opts, std::string_view experiment) {
    const std::uint32_t id = experiment_id(std::string(experiment) + "/dictionary");
    Dictionary dict;
    for (int k = 0; k < tv.dictionary; ++k) {
        Stream s = opts.rng.stream(id, static_cast<std::uint64_t>(k), kAuxiliary);
        HVector a(dim);
        for (int c = 0; c < dim; ++c) {
            a(c) = tv.frequency_scale * s.normal();
        }
        dict.a.push_back(a);
        dict.theta.push_back(2.0 * std::numbers::pi * s.uniform());
    }
    return dict;
}

// Statistics (a) and (b) of one resample.
struct TvParts {
    double dictionary = 0.0;
    double histogram = 0.0;
};

}  // namespace

std::size_t burn_in_index(std::size_t checkpoints) {
    return static_cast<std::size_t>(std::floor(0.2 * static_cast<double>(checkpoints)));
}

DecayFit fit_decay(std::span<const double> t, std::span<const double> values, std::span<const double> stderrs) {
    require(t.size() == values.size() && t.size() == stderrs.size(), "curve arrays differ in length");
    double sw = 0.0;
    double st = 0.0;
    double sy = 0.0;
    double stt = 0.0;
    double sty = 0.0;
    int points = 0;
    for (std::size_t j = burn_in_index(t.size()); j < t.size(); ++j) {
        const double v = values[j];
        if (!(v > 0.0) || stderrs[j] > v / 3.0) {
            continue;
        }
        const double rel = stderrs[j] / v;
        const double w = 1.0 / (rel * rel + 1e-6);
        const double ly = std::log(v);
        sw += w;
        st += w * t[j];
        sy += w * ly;
        stt += w * t[j] * t[j];
        sty += w * t[j] * ly;
        ++points;
    }
    DecayFit fit;
    fit.points = points;
    const double denom = sw * stt - st * st;
    if (points < 2 || !(denom > 0.0)) {
        fit.rate = std::numeric_limits<double>::quiet_NaN();
        fit.prefactor = std::numeric_limits<double>::quiet_NaN();
        return fit;
    }
    const double slope = (sw * sty - st * sy) / denom;
    const double intercept = (sy - slope * st) / sw;
    fit.rate = -slope;
    fit.prefactor = std::exp(intercept);
    return fit;
}

double contraction_bound(const Dynamics& dyn, const HVector& x, const HVector& y, double t) {
    return std::exp((-dyn.model.gamma_min() + dyn.drift.lip_bound()) * t) * (x - y).norm();
}

DecayCurve contraction_curve(const Dynamics& dyn, const HVector& x, const HVector& y,
                             std::span<const double> checkpoints, const McOptions& opts,
                             std::string_view experiment) {
    check_checkpoints(checkpoints);
    require(x.size() == dyn.model.dim() && y.size() == dyn.model.dim(), "start points need the model dimension");
    const double horizon = checkpoints.back();
    const bool uniform = !dyn.drift.is_zero();
    const auto m = static_cast<int>(checkpoints.size());
    const EstimatorResult r = monte_carlo(opts, experiment, m, [&](Stream& stream, Eigen::VectorXd& out) {
        const JumpPath path = sample_jump_path(dyn.density, dyn.model, dyn.secondary, horizon, stream);
        MildStepper stepper(dyn.model, dyn.drift, dyn.dt);
        HVector state = x;
        HVector gap = x - y;
        int j = 0;
        walk_path(
            path, dyn.dt, horizon, uniform, checkpoints, [&](double h) { stepper.step_coupled(state, gap, h); },
            [&](const JumpEvent& e, bool) { state += e.mark; },
            [&](double, bool at_stop) {
                if (at_stop) {
                    out(j++) = gap.norm();
                }
            });
    });
    DecayCurve curve;
    curve.checkpoints.assign(checkpoints.begin(), checkpoints.end());
    curve.values.assign(r.mean.data(), r.mean.data() + m);
    curve.stderrs.assign(r.stderr.data(), r.stderr.data() + m);
    curve.fit = fit_decay(curve.checkpoints, curve.values, curve.stderrs);
    return curve;
}

std::vector<TvEstimate> tv_lower_bound(const Dynamics& dyn, const HVector& x, const HVector& y,
                                       std::span<const double> checkpoints, const McOptions& opts,
                                       std::string_view experiment, const TvOptions& tv) {
    check_checkpoints(checkpoints);
    require(x.size() == dyn.model.dim() && y.size() == dyn.model.dim(), "start points need the model dimension");
    require(opts.samples >= 2, "TV estimate needs at least two samples");
    require(tv.dictionary >= 1 && tv.bins >= 2 && tv.bootstrap >= 2, "invalid TV estimator options");
    const int d = dyn.model.dim();
    const std::size_t n = opts.samples;
    const auto K = static_cast<std::size_t>(tv.dictionary);
    const auto B = static_cast<std::size_t>(tv.bins);
    const CheckpointStates states = simulate_pairs(dyn, x, y, checkpoints, opts, experiment, tv.coupling);
    const Dictionary dict = make_dictionary(d, tv, opts, experiment);
    const std::uint32_t boot_id = experiment_id(std::string(experiment) + "/bootstrap");

    std::vector<TvEstimate> result;
    std::vector<double> diff(n * K);
    std::vector<int> bin_x(n);
    std::vector<int> bin_y(n);
    for (std::size_t j = 0; j < checkpoints.size(); ++j) {
        double lo = std::numeric_limits<double>::infinity();
        double hi = -std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < n; ++i) {
            const double ux = states.at(states.x, i, j)[0];
            const double uy = states.at(states.y, i, j)[0];
            lo = std::min({lo, ux, uy});
            hi = std::max({hi, ux, uy});
        }
        const double width = (hi > lo) ? (hi - lo) / static_cast<double>(B) : 1.0;
        auto bin_of = [&](double u) {
            const auto b = static_cast<long>(std::floor((u - lo) / width));
            return static_cast<int>(std::clamp<long>(b, 0, static_cast<long>(B) - 1));
        };
        parallel_for(n, opts.workers, [&](std::size_t i) {
            const Eigen::Map<const HVector> xi(states.at(states.x, i, j), d);
            const Eigen::Map<const HVector> yi(states.at(states.y, i, j), d);
            for (std::size_t k = 0; k < K; ++k) {
                diff[i * K + k] = std::cos(dict.a[k].dot(xi) + dict.theta[k]) - std::cos(dict.a[k].dot(yi) + dict.theta[k]);
            }
            bin_x[i] = bin_of(xi(0));
            bin_y[i] = bin_of(yi(0));
        });

        auto statistic = [&](auto&& index_of_draw) {
            std::vector<double> sums(K, 0.0);
            std::vector<long> counts(B, 0);
            for (std::size_t r = 0; r < n; ++r) {
                const std::size_t i = index_of_draw(r);
                const double* row = diff.data() + i * K;
                for (std::size_t k = 0; k < K; ++k) {
                    sums[k] += row[k];
                }
                ++counts[static_cast<std::size_t>(bin_x[i])];
                --counts[static_cast<std::size_t>(bin_y[i])];
            }
            TvParts parts;
            for (double s : sums) {
                parts.dictionary = std::max(parts.dictionary, std::abs(s) / static_cast<double>(n));
            }
            for (long c : counts) {
                parts.histogram += static_cast<double>(std::labs(c)) / static_cast<double>(n);
            }
            return parts;
        };

        const TvParts point = statistic([](std::size_t r) { return r; });
        std::vector<double> boot(static_cast<std::size_t>(tv.bootstrap));
        parallel_for(boot.size(), opts.workers, [&](std::size_t b) {
            Stream s = opts.rng.stream(boot_id, b * checkpoints.size() + j, kAuxiliary);
            const TvParts parts = statistic([&](std::size_t) {
                return std::min(n - 1, static_cast<std::size_t>(s.uniform() * static_cast<double>(n)));
            });
            boot[b] = std::max(parts.dictionary, parts.histogram);
        });
        MomentAccumulator acc(1);
        for (double v : boot) {
            acc.add(std::array<double, 1>{v});
        }
        result.push_back({checkpoints[j], std::max(point.dictionary, point.histogram),
                          std::sqrt(acc.variance()(0)), point.dictionary, point.histogram});
    }
    return result;
}

double tv_rate(const Dynamics& dyn) {
    const double lambda = dyn.density.intensity(dyn.model);
    const double gap = dyn.model.gamma_min() - dyn.drift.lip_bound();
    return lambda * gap / (lambda + gap);
}

bool TvDecayResult::bound_ok() const {
    return std::all_of(below.begin(), below.end(), [](bool b) { return b; });
}

TvDecayResult tv_decay_experiment(const Dynamics& dyn, const HVector& x, const HVector& y,
                                  std::span<const double> checkpoints, const McOptions& opts,
                                  std::string_view experiment, const TvOptions& tv, double rate_tolerance) {
    require_dissipative(dyn);
    check_checkpoints(checkpoints);
    TvDecayResult res;
    res.r_star = tv_rate(dyn);
    res.separation = (x - y).norm();
    res.rate_tolerance = rate_tolerance;
    res.q_growth = q_growth(dyn.model, checkpoints.back());
    res.estimates = tv_lower_bound(dyn, x, y, checkpoints, opts, experiment, tv);
    res.curve.checkpoints.assign(checkpoints.begin(), checkpoints.end());
    for (const auto& e : res.estimates) {
        res.curve.values.push_back(e.value);
        res.curve.stderrs.push_back(e.stderr);
    }
    res.curve.fit = fit_decay(res.curve.checkpoints, res.curve.values, res.curve.stderrs);

    res.calibration_index = std::min(burn_in_index(checkpoints.size()), checkpoints.size() - 1);
    const double tc = checkpoints[res.calibration_index];
    res.calibration_c = res.curve.values[res.calibration_index] /
                        ((1.0 + res.separation) * std::exp(-res.r_star * tc));
    for (std::size_t j = 0; j < checkpoints.size(); ++j) {
        const double bound = res.calibration_c * (1.0 + res.separation) * std::exp(-res.r_star * checkpoints[j]);
        res.bounds.push_back(bound);
        res.below.push_back(res.curve.values[j] <= bound + 3.0 * res.curve.stderrs[j]);
    }
    return res;
}

double gradient_bound_rhs(const Dynamics& dyn, const TestFunction& f, double t) {
    require(t > 0.0, "time must be positive");
    require(f.bounded(), "the gradient bound needs a bounded test function");
    const double grad_f = dyn.drift.lip_bound();
    const double kappa = dyn.model.gamma_min() - grad_f;
    if (!(kappa > 0.0)) {
        std::ostringstream msg;
        msg << "(H3/H4) the gradient bound needs gamma_1 > ||grad F||_inf, got " << dyn.model.gamma_min()
            << " <= " << grad_f;
        throw DomainError(msg.str());
    }
    const double lambda = dyn.density.intensity(dyn.model);
    const double moment = dyn.density.second_moment(dyn.model) / (lambda * lambda);
    const double gamma_term = grad_f > 0.0 ? grad_f * grad_f * gamma_t(dyn.model, grad_f, t) : 0.0;
    const double noise = (gamma_term + q_inv_semigroup_sq_integral(dyn.model, t)) / (t * t);
    const double first = std::sqrt(6.0 * moment * noise);
    const double second = dyn.density.grad_abs_integral(dyn.model) / kappa;
    return 2.0 * f.sup_norm() * (first + second);
}

std::vector<GradientBoundRow> gradient_bound_check(const Dynamics& dyn, const TestFunction& f,
                                                   std::span<const double> t_grid, int probes,
                                                   const McOptions& opts, std::string_view experiment) {
    require(probes >= 1, "at least one probe is needed");
    check_checkpoints(t_grid);
    const int d = dyn.model.dim();
    const std::uint32_t probe_id = experiment_id(std::string(experiment) + "/probes");
    std::vector<GradientBoundRow> rows(t_grid.size());
    for (std::size_t j = 0; j < t_grid.size(); ++j) {
        rows[j].t = t_grid[j];
        rows[j].rhs = gradient_bound_rhs(dyn, f, t_grid[j]);
    }
    for (int p = 0; p < probes; ++p) {
        Stream s = opts.rng.stream(probe_id, static_cast<std::uint64_t>(p), kAuxiliary);
        HVector x(d);
        HVector xi(d);
        for (int c = 0; c < d; ++c) {
            x(c) = s.normal();
        }
        for (int c = 0; c < d; ++c) {
            xi(c) = s.normal();
        }
        xi.normalize();
        const EstimatorResult r =
            bismut_gradient(dyn, f, x, xi, t_grid, opts, std::string(experiment) + "/probe" + std::to_string(p));
        for (std::size_t j = 0; j < t_grid.size(); ++j) {
            const double v = std::abs(r.value(static_cast<int>(j)));
            if (p == 0 || v > rows[j].sup_abs) {
                rows[j].sup_abs = v;
                rows[j].sup_stderr = r.error(static_cast<int>(j));
                rows[j].argmax_probe = p;
            }
        }
    }
    return rows;
}

}  // namespace jumplab
