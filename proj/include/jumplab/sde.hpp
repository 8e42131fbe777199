#pragma once

#include "jumplab/drift.hpp"
#include "jumplab/jump_noise.hpp"
#include "jumplab/spectral.hpp"

#include <algorithm>
#include <limits>
#include <span>
#include <utility>
#include <vector>

namespace jumplab {

/// Time-gridded mild solution. Column j of `states` is X at `times[j]`,
/// taken immediately after any jump at that time.
struct Trajectory {
    double dt = 0.0;
    std::vector<double> times;
    Eigen::MatrixXd states;

    std::size_t size() const { return times.size(); }
    HVector state(std::size_t j) const { return states.col(static_cast<Eigen::Index>(j)); }
    /// Index of the grid node at time t (exact match up to 1e-12 relative).
    std::size_t index_of(double t) const;
    /// State at the last grid node with time <= t.
    HVector state_at(double t) const;
};

/// Fundamental matrices J_t on a trajectory grid, with det J_t as an invertibility certificate.
struct JacobianFlow {
    std::vector<double> times;
    std::vector<Eigen::MatrixXd> mats;
    std::vector<double> determinants;

    std::size_t index_of(double t) const;
    const Eigen::MatrixXd& at(double t) const { return mats[index_of(t)]; }
};

/// dt default: 1e-3 * min(1, 1 / gamma_d).
double default_dt(const SpectralModel& model);

/// Exponential-Euler propagator over one jump-free interval of length h:
/// X <- S(h) X + Phi(h) F(X), Phi(h) = int_0^h S(u) du.
/// The factors for the base step are cached; any other h is computed on demand.
class MildStepper {
public:
    MildStepper(const SpectralModel& model, const DriftField& drift, double dt);

    const SpectralModel& model() const { return *model_; }
    const DriftField& drift() const { return *drift_; }
    double dt() const { return dt_; }

    void step(HVector& x, double h);
    /// Advances x and the tangent v <- (S(h) + Phi(h) grad F(x)) v.
    void step_tangent(HVector& x, HVector& v, double h);
    /// Advances x and the matrix J <- (S(h) + Phi(h) grad F(x)) J.
    void step_jacobian(HVector& x, Eigen::MatrixXd& jac, double h);
    /// J <- (S(h) + Phi(h) grad F(x)) J with x held fixed (x is the state at the start of the step).
    void linearised_step(const HVector& x, Eigen::MatrixXd& jac, double h);
    /// Advances x and the coupling gap g = x - y (y = x - g driven by the same noise).
    void step_coupled(HVector& x, HVector& gap, double h);


private:
    void load(double h);

    const SpectralModel* model_;
    const DriftField* drift_;
    double dt_;
    Eigen::VectorXd base_decay_, base_phi_;
    Eigen::VectorXd tmp_decay_, tmp_phi_;
    const Eigen::VectorXd* decay_ = nullptr;
    const Eigen::VectorXd* phi_ = nullptr;
    HVector force_, force2_, work_;
    Eigen::MatrixXd grad_, jac_work_;
};

/// Walks a jump path on the grid used by the mild integrator.
///
/// Grid nodes are the base points k*dt (when `uniform` is true), every
/// primary and secondary jump time, every time in `stops`, and `t_end`.
/// For each node it calls `advance(h)` over the jump-free gap, then
/// `jump(event, primary)` for each jump at that node, then
/// `arrive(t, at_stop)`. With `uniform == false` only jumps, stops and
/// t_end are nodes, which is exact for linear dynamics.
template <class Advance, class Jump, class Arrive>
void walk_path(const JumpPath& path, double dt, double t_end, bool uniform,
               std::span<const double> stops, Advance&& advance, Jump&& jump, Arrive&& arrive) {
    struct Ref {
        double time;
        const JumpEvent* event;
        bool primary;
    };
    std::vector<Ref> merged;
    merged.reserve(path.events.size() + path.secondary_events.size());
    for (const auto& e : path.events) {
        merged.push_back({e.time, &e, true});
    }
    for (const auto& e : path.secondary_events) {
        merged.push_back({e.time, &e, false});
    }
    if (!path.secondary_events.empty()) {
        std::stable_sort(merged.begin(), merged.end(),
                         [](const Ref& a, const Ref& b) { return a.time < b.time; });
    }

    const double tol = 1e-9 * dt;
    constexpr double inf = std::numeric_limits<double>::infinity();
    double t = 0.0;
    std::size_t base = 0;
    std::size_t ev = 0;
    std::size_t st = 0;
    while (st < stops.size() && stops[st] <= tol) {
        ++st;
    }
    while (t < t_end - tol) {
        const double next_base = uniform ? static_cast<double>(base + 1) * dt : inf;
        const double next_event = (ev < merged.size()) ? merged[ev].time : inf;
        const double next_stop = (st < stops.size()) ? stops[st] : inf;
        double tn = std::min({next_base, next_event, next_stop, t_end});
        if (next_event <= tn + tol) {
            tn = std::max(tn, next_event);
        }
        if (tn > t) {
            advance(tn - t);
        }
        t = tn;
        if (uniform) {
            while (static_cast<double>(base + 1) * dt <= t + tol) {
                ++base;
            }
        }
        while (ev < merged.size() && merged[ev].time <= t + tol) {
            jump(*merged[ev].event, merged[ev].primary);
            ++ev;
        }
        bool at_stop = false;
        while (st < stops.size() && stops[st] <= t + tol) {
            at_stop = true;
            ++st;
        }
        arrive(t, at_stop);
    }
}

/// Mild solution of dX = AX dt + F(X) dt + dL on [0, t_end] (t_end defaults to the path horizon).
Trajectory solve_mild(const SpectralModel& model, const DriftField& drift, const JumpPath& path,
                      const HVector& x0, double dt, double t_end = -1.0);

/// J_t along a trajectory: J_0 = I, same exponential-Euler step, jumps do not act on J.
JacobianFlow jacobian_flow(const SpectralModel& model, const DriftField& drift, const Trajectory& traj);

/// J_{st} = J_t J_s^{-1}; rejects J_s with condition number above 1e12.
Eigen::MatrixXd jacobian_transition(const JacobianFlow& flow, double s, double t);

/// Forward solve of dJ_{st} = (A + grad F(X_t)) J_{st} dt from J_{ss} = I on the trajectory grid.
Eigen::MatrixXd jacobian_transition_resolve(const SpectralModel& model, const DriftField& drift,
                                            const Trajectory& traj, double s, double t);

/// Two solutions from x0 and y0 driven by the same noise path.
std::pair<Trajectory, Trajectory> coupled_solve(const SpectralModel& model, const DriftField& drift,
                                                const JumpPath& path, const HVector& x0,
                                                const HVector& y0, double dt, double t_end = -1.0);

}  // namespace jumplab
