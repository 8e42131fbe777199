#include "jumplab/sde.hpp"

#include "jumplab/error.hpp"

#include <cmath>
#include <sstream>

namespace jumplab {

namespace {

std::size_t find_time(const std::vector<double>& times, double t) {
    const auto it = std::lower_bound(times.begin(), times.end(), t - 1e-12 * std::max(1.0, std::abs(t)));
    if (it == times.end() || std::abs(*it - t) > 1e-12 * std::max(1.0, std::abs(t))) {
        std::ostringstream msg;
        msg << "time " << t << " is not a grid node";
        throw DomainError(msg.str());
    }
    return static_cast<std::size_t>(it - times.begin());
}

void check_finite(const HVector& x, double t) {
    if (!x.allFinite()) {
        std::ostringstream msg;
        msg << "non-finite state at t = " << t << ": " << x.transpose();
        throw NumericalError(msg.str());
    }
}

}  // namespace

std::size_t Trajectory::index_of(double t) const { return find_time(times, t); }

HVector Trajectory::state_at(double t) const {
    const auto it = std::upper_bound(times.begin(), times.end(), t + 1e-12 * std::max(1.0, std::abs(t)));
    require(it != times.begin(), "time precedes the trajectory");
    return state(static_cast<std::size_t>(it - times.begin()) - 1);
}

std::size_t JacobianFlow::index_of(double t) const { return find_time(times, t); }

double default_dt(const SpectralModel& model) {
    return 1e-3 * std::min(1.0, 1.0 / model.gamma_max());
}

MildStepper::MildStepper(const SpectralModel& model, const DriftField& drift, double dt)
    : model_(&model), drift_(&drift), dt_(dt) {
    require(dt > 0.0 && std::isfinite(dt), "time step dt must be positive");
    drift.validate(model);
    base_decay_ = semigroup_diagonal(model, dt);
    base_phi_ = semigroup_integral(model, dt);
    const int d = model.dim();
    force_.resize(d);
    force2_.resize(d);
    work_.resize(d);
    grad_.resize(d, d);
    jac_work_.resize(d, d);
}

void MildStepper::load(double h) {
    if (std::abs(h - dt_) <= 1e-12 * dt_) {
        decay_ = &base_decay_;
        phi_ = &base_phi_;
        return;
    }
    tmp_decay_ = semigroup_diagonal(*model_, h);
    tmp_phi_ = semigroup_integral(*model_, h);
    decay_ = &tmp_decay_;
    phi_ = &tmp_phi_;
}

void MildStepper::step(HVector& x, double h) {
    load(h);
    if (drift_->is_zero()) {
        x.array() *= decay_->array();
        return;
    }
    drift_->eval(x, force_);
    x.array() = decay_->array() * x.array() + phi_->array() * force_.array();
}

void MildStepper::step_tangent(HVector& x, HVector& v, double h) {
    load(h);
    if (drift_->is_zero()) {
        x.array() *= decay_->array();
        v.array() *= decay_->array();
        return;
    }
    drift_->jacobian_apply(x, v, work_);
    drift_->eval(x, force_);
    v.array() = decay_->array() * v.array() + phi_->array() * work_.array();
    x.array() = decay_->array() * x.array() + phi_->array() * force_.array();
}

void MildStepper::step_jacobian(HVector& x, Eigen::MatrixXd& jac, double h) {
    load(h);
    if (drift_->is_zero()) {
        x.array() *= decay_->array();
        jac = decay_->asDiagonal() * jac;
        return;
    }
    drift_->jacobian(x, grad_);
    drift_->eval(x, force_);
    jac_work_.noalias() = grad_ * jac;
    jac = decay_->asDiagonal() * jac;
    jac.noalias() += phi_->asDiagonal() * jac_work_;
    x.array() = decay_->array() * x.array() + phi_->array() * force_.array();
}

void MildStepper::linearised_step(const HVector& x, Eigen::MatrixXd& jac, double h) {
    load(h);
    if (drift_->is_zero()) {
        jac = decay_->asDiagonal() * jac;
        return;
    }
    drift_->jacobian(x, grad_);
    jac_work_.noalias() = grad_ * jac;
    jac = decay_->asDiagonal() * jac;
    jac.noalias() += phi_->asDiagonal() * jac_work_;
}

void MildStepper::step_coupled(HVector& x, HVector& gap, double h) {
    load(h);
    if (drift_->is_zero()) {
        x.array() *= decay_->array();
        gap.array() *= decay_->array();
        return;
    }
    drift_->eval(x, force_);
    work_ = x - gap;
    drift_->eval(work_, force2_);
    gap.array() = decay_->array() * gap.array() + phi_->array() * (force_ - force2_).array();
    x.array() = decay_->array() * x.array() + phi_->array() * force_.array();
}

Trajectory solve_mild(const SpectralModel& model, const DriftField& drift, const JumpPath& path,
                      const HVector& x0, double dt, double t_end) {
    require(dt > 0.0, "time step dt must be positive");
    require(x0.size() == model.dim(), "initial state has the wrong dimension");
    if (t_end < 0.0) {
        t_end = path.horizon;
    }
    require(path.horizon >= t_end - 1e-12, "jump path horizon is shorter than the requested end time");

    MildStepper stepper(model, drift, dt);
    HVector x = x0;
    std::vector<double> times{0.0};
    std::vector<HVector> states{x};
    const auto nodes = static_cast<std::size_t>(std::ceil(t_end / dt)) + path.events.size() +
                       path.secondary_events.size() + 2;
    times.reserve(nodes);
    states.reserve(nodes);

    walk_path(
        path, dt, t_end, true, {}, [&](double h) { stepper.step(x, h); },
        [&](const JumpEvent& e, bool) { x += e.mark; },
        [&](double t, bool) {
            check_finite(x, t);
            times.push_back(t);
            states.push_back(x);
        });

    Trajectory traj;
    traj.dt = dt;
    traj.times = std::move(times);
    traj.states.resize(model.dim(), static_cast<Eigen::Index>(states.size()));
    for (std::size_t j = 0; j < states.size(); ++j) {
        traj.states.col(static_cast<Eigen::Index>(j)) = states[j];
    }
    return traj;
}

namespace {

// Propagates J over the trajectory grid from node `from` to node `to`,
// calling visit(j, J) after each node.
template <class Visit>
void propagate_linearised(const SpectralModel& model, const DriftField& drift, const Trajectory& traj,
                          std::size_t from, std::size_t to, Eigen::MatrixXd jac, Visit&& visit) {
    require(traj.dt > 0.0, "trajectory carries no base step");
    MildStepper stepper(model, drift, traj.dt);
    for (std::size_t j = from; j < to; ++j) {
        const double h = traj.times[j + 1] - traj.times[j];
        if (h > 0.0) {
            stepper.linearised_step(traj.state(j), jac, h);
        }
        visit(j + 1, jac);
    }
}

}  // namespace

JacobianFlow jacobian_flow(const SpectralModel& model, const DriftField& drift, const Trajectory& traj) {
    require(traj.states.rows() == model.dim(), "trajectory dimension does not match the model");
    drift.validate(model);
    JacobianFlow flow;
    flow.times = traj.times;
    flow.mats.reserve(traj.size());
    flow.determinants.reserve(traj.size());
    const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(model.dim(), model.dim());
    flow.mats.push_back(eye);
    flow.determinants.push_back(1.0);
    propagate_linearised(model, drift, traj, 0, traj.size() - 1, eye,
                         [&](std::size_t, const Eigen::MatrixXd& jac) {
                             flow.mats.push_back(jac);
                             flow.determinants.push_back(jac.determinant());
                         });
    return flow;
}

Eigen::MatrixXd jacobian_transition(const JacobianFlow& flow, double s, double t) {
    require(s <= t, "jacobian transition needs s <= t");
    const std::size_t js = flow.index_of(s);
    const std::size_t jt = flow.index_of(t);
    const Eigen::MatrixXd& left = flow.mats[js];
    if (js == jt) {
        return Eigen::MatrixXd::Identity(left.rows(), left.cols());
    }
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(left);
    const auto& sv = svd.singularValues();
    const double smallest = sv(sv.size() - 1);
    if (!(smallest > 0.0) || sv(0) / smallest > 1e12) {
        std::ostringstream msg;
        msg << "J_s is numerically singular at s = " << s << " (condition number "
            << (smallest > 0.0 ? sv(0) / smallest : std::numeric_limits<double>::infinity()) << ")";
        throw NumericalError(msg.str());
    }
    return flow.mats[jt] * left.partialPivLu().inverse();
}

Eigen::MatrixXd jacobian_transition_resolve(const SpectralModel& model, const DriftField& drift,
                                            const Trajectory& traj, double s, double t) {
    require(s <= t, "jacobian transition needs s <= t");
    const std::size_t js = traj.index_of(s);
    const std::size_t jt = traj.index_of(t);
    Eigen::MatrixXd out = Eigen::MatrixXd::Identity(model.dim(), model.dim());
    propagate_linearised(model, drift, traj, js, jt, out,
                         [&](std::size_t, const Eigen::MatrixXd& jac) { out = jac; });
    return out;
}

std::pair<Trajectory, Trajectory> coupled_solve(const SpectralModel& model, const DriftField& drift,
                                                const JumpPath& path, const HVector& x0,
                                                const HVector& y0, double dt, double t_end) {
    require(dt > 0.0, "time step dt must be positive");
    require(x0.size() == model.dim() && y0.size() == model.dim(), "initial states have the wrong dimension");
    if (t_end < 0.0) {
        t_end = path.horizon;
    }
    require(path.horizon >= t_end - 1e-12, "jump path horizon is shorter than the requested end time");

    MildStepper stepper(model, drift, dt);
    HVector x = x0;
    HVector gap = x0 - y0;
    std::vector<double> times{0.0};
    std::vector<HVector> xs{x};
    std::vector<HVector> ys{y0};
    walk_path(
        path, dt, t_end, true, {}, [&](double h) { stepper.step_coupled(x, gap, h); },
        [&](const JumpEvent& e, bool) { x += e.mark; },
        [&](double t, bool) {
            check_finite(x, t);
            times.push_back(t);
            xs.push_back(x);
            ys.push_back(x - gap);
        });

    auto pack = [&](const std::vector<HVector>& states) {
        Trajectory traj;
        traj.dt = dt;
        traj.times = times;
        traj.states.resize(model.dim(), static_cast<Eigen::Index>(states.size()));
        for (std::size_t j = 0; j < states.size(); ++j) {
            traj.states.col(static_cast<Eigen::Index>(j)) = states[j];
        }
        return traj;
    };
    return {pack(xs), pack(ys)};
}

}  // namespace jumplab
