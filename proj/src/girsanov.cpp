#include "jumplab/girsanov.hpp"

#include "jumplab/error.hpp"

#include <algorithm>
#include <cmath>

namespace jumplab {

namespace {

double log_lambda_ratio(const GirsanovScenario& sc, const SpectralModel& model, const HVector& z,
                        CmSign sign) {
    if (sc.epsilon == 0.0) {
        return 0.0;
    }
    const HVector h = sc.epsilon * sc.v;
    return cm_log_density(model, z, h, sign) + std::log(sc.density.rho(z + h)) - std::log(sc.density.rho(z));
}

void check_scenario(const GirsanovScenario& sc, const SpectralModel& model) {
    require(sc.epsilon >= 0.0 && sc.epsilon <= 1.0, "epsilon must lie in [0, 1]");
    require(sc.v.size() == model.dim(), "perturbation direction has the wrong dimension");
    sc.density.validate(model);
}

HVector primary_value(const JumpPath& path, double t, int dim) {
    HVector total = HVector::Zero(dim);
    for (const auto& e : path.events) {
        if (e.time > t) {
            break;
        }
        total += e.mark;
    }
    return total;
}

}  // namespace

double lambda_ratio(const GirsanovScenario& sc, const SpectralModel& model, const HVector& z, CmSign sign) {
    return std::exp(log_lambda_ratio(sc, model, z, sign));
}

double girsanov_weight(const GirsanovScenario& sc, const SpectralModel& model, const JumpPath& path, double t,
                       CmSign sign) {
    double log_z = 0.0;
    for (const auto& e : path.events) {
        if (e.time > t) {
            break;
        }
        log_z += log_lambda_ratio(sc, model, e.mark, sign);
    }
    return std::exp(log_z);
}

JumpPath perturbed_path(const GirsanovScenario& sc, const JumpPath& path, double t) {
    JumpPath out = path;
    if (sc.epsilon == 0.0) {
        return out;
    }
    for (auto& e : out.events) {
        if (e.time > t) {
            break;
        }
        e.mark += sc.epsilon * sc.v;
    }
    return out;
}

ReweightResult reweight_check(const GirsanovScenario& sc, const SpectralModel& model, const TestFunction& g,
                              double t, const McOptions& opts, std::string_view experiment, CmSign sign) {
    check_scenario(sc, model);
    require(t > 0.0 && t <= sc.horizon, "time must lie in (0, horizon]");
    const int d = model.dim();
    const EstimatorResult all = monte_carlo(opts, experiment, 3, [&](Stream& stream, Eigen::VectorXd& out) {
        const JumpPath path = sample_jump_path(sc.density, model, NoSecondaryNoise{}, sc.horizon, stream);
        const double z = girsanov_weight(sc, model, path, t, sign);
        const HVector base = primary_value(path, t, d);
        const HVector moved = primary_value(perturbed_path(sc, path, t), t, d);
        out(0) = z * g.value(moved);
        out(1) = g.value(base);
        out(2) = z;
    });
    return {all.channel(0), all.channel(1), all.channel(2)};
}

double ZMomentSweep::max_estimate() const {
    double best = 0.0;
    for (const auto& r : rows) {
        best = std::max(best, r.second_moment.value());
    }
    return best;
}

double ZMomentSweep::median_estimate() const {
    std::vector<double> values;
    values.reserve(rows.size());
    for (const auto& r : rows) {
        values.push_back(r.second_moment.value());
    }
    if (values.empty()) {
        return 0.0;
    }
    std::sort(values.begin(), values.end());
    const std::size_t mid = values.size() / 2;
    return values.size() % 2 == 1 ? values[mid] : 0.5 * (values[mid - 1] + values[mid]);
}

bool ZMomentSweep::bounded() const {
    for (const auto& r : rows) {
        if (!std::isfinite(r.second_moment.value())) {
            return false;
        }
    }
    return max_estimate() <= 10.0 * median_estimate();
}

ZMomentSweep z_moment_sweep(const GirsanovScenario& sc, const SpectralModel& model, double t,
                            const McOptions& opts, std::span<const double> eps_grid, std::string_view experiment,
                            CmSign sign) {
    check_scenario(sc, model);
    require(!eps_grid.empty(), "epsilon grid is empty");
    for (double e : eps_grid) {
        require(e > 0.0 && e <= 1.0, "epsilon grid must lie in (0, 1]");
    }
    const auto k = static_cast<int>(eps_grid.size());
    const ConstantDir dir{sc.v};
    const EstimatorResult all = monte_carlo(opts, experiment, k + 1, [&](Stream& stream, Eigen::VectorXd& out) {
        const JumpPath path = sample_jump_path(sc.density, model, NoSecondaryNoise{}, sc.horizon, stream);
        GirsanovScenario local = sc;
        for (int j = 0; j < k; ++j) {
            local.epsilon = eps_grid[static_cast<std::size_t>(j)];
            // expm1 keeps (Z - 1) / eps accurate for small eps.
            double log_z = 0.0;
            for (const auto& e : path.events) {
                if (e.time > t) {
                    break;
                }
                log_z += log_lambda_ratio(local, model, e.mark, sign);
            }
            const double q = std::expm1(log_z) / local.epsilon;
            out(j) = q * q;
        }
        const double m = martingale_weight(model, sc.density, path, dir, t, nullptr, sign);
        out(k) = m * m;
    });
    ZMomentSweep sweep;
    for (int j = 0; j < k; ++j) {
        sweep.rows.push_back({eps_grid[static_cast<std::size_t>(j)], all.channel(j)});
    }
    sweep.m_squared = all.channel(k);
    return sweep;
}

EstimatorResult compensator_vanishing(const GirsanovScenario& sc, const SpectralModel& model,
                                      const McOptions& opts, std::string_view experiment, CmSign sign) {
    check_scenario(sc, model);
    return monte_carlo(opts, experiment, 1, [&](Stream& stream, Eigen::VectorXd& out) {
        const HVector z = sample_mu(model, stream);
        out(0) = (lambda_ratio(sc, model, z, sign) - 1.0) * sc.density.rho(z);
    });
}

}  // namespace jumplab
