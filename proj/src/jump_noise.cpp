#include "jumplab/jump_noise.hpp"

#include "jumplab/error.hpp"
#include "jumplab/rng.hpp"

#include <cmath>
#include <functional>
#include <numbers>

namespace jumplab {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

constexpr int kRejectionGuard = 1'000'000;

// E|cos(sigma G)| for G standard normal, from the Fourier series of |cos|.
double mean_abs_cos_gaussian(double sigma) {
    double sum = 2.0 / std::numbers::pi;
    for (int k = 1; k <= 20000; ++k) {
        const double kk = static_cast<double>(k);
        const double damp = std::exp(-2.0 * kk * kk * sigma * sigma);
        const double term = (4.0 / std::numbers::pi) / (4.0 * kk * kk - 1.0) * damp;
        sum += (k % 2 == 1) ? term : -term;
        if (damp < 1e-300) {
            break;
        }
    }
    return sum;
}

}  // namespace

JumpDensity::JumpDensity(ConstantDensity d) : variant_(d) {
    require(std::isfinite(d.lambda0) && d.lambda0 > 0.0, "(H1) lambda0 must be positive");
}

JumpDensity::JumpDensity(TiltedSineDensity d) : variant_(d) {
    require(std::isfinite(d.lambda0) && d.lambda0 > 0.0, "(H1) lambda0 must be positive");
    require(d.eps > 0.0 && d.eps < 1.0, "(H1) tilted-sine eps must lie in (0, 1)");
    require(d.b.size() > 0 && d.b.allFinite(), "(H1) tilted-sine direction b must be finite");
}

double JumpDensity::lambda0() const {
    return std::visit([](const auto& d) { return d.lambda0; }, variant_);
}

double JumpDensity::rho(const HVector& z) const {
    return std::visit(Overloaded{[](const ConstantDensity& d) { return d.lambda0; },
                                 [&](const TiltedSineDensity& d) {
                                     return d.lambda0 * (1.0 + d.eps * std::sin(d.b.dot(z)));
                                 }},
                      variant_);
}

HVector JumpDensity::grad_rho(const HVector& z) const {
    return std::visit(Overloaded{[&](const ConstantDensity&) -> HVector { return HVector::Zero(z.size()); },
                                 [&](const TiltedSineDensity& d) -> HVector {
                                     return d.lambda0 * d.eps * std::cos(d.b.dot(z)) * d.b;
                                 }},
                      variant_);
}

HVector JumpDensity::grad_log_rho(const HVector& z) const {
    return std::visit(Overloaded{[&](const ConstantDensity&) -> HVector { return HVector::Zero(z.size()); },
                                 [&](const TiltedSineDensity& d) -> HVector {
                                     const double s = d.b.dot(z);
                                     return (d.eps * std::cos(s) / (1.0 + d.eps * std::sin(s))) * d.b;
                                 }},
                      variant_);
}

double JumpDensity::grad_log_rho_dot(const HVector& z, const HVector& v) const {
    return std::visit(Overloaded{[](const ConstantDensity&) { return 0.0; },
                                 [&](const TiltedSineDensity& d) {
                                     const double s = d.b.dot(z);
                                     return d.eps * std::cos(s) / (1.0 + d.eps * std::sin(s)) * d.b.dot(v);
                                 }},
                      variant_);
}

double JumpDensity::rho_min() const {
    return std::visit(Overloaded{[](const ConstantDensity& d) { return d.lambda0; },
                                 [](const TiltedSineDensity& d) { return d.lambda0 * (1.0 - d.eps); }},
                      variant_);
}

double JumpDensity::rho_max() const {
    return std::visit(Overloaded{[](const ConstantDensity& d) { return d.lambda0; },
                                 [](const TiltedSineDensity& d) { return d.lambda0 * (1.0 + d.eps); }},
                      variant_);
}

double JumpDensity::grad_sup() const {
    return std::visit(Overloaded{[](const ConstantDensity&) { return 0.0; },
                                 [](const TiltedSineDensity& d) { return d.lambda0 * d.eps * d.b.norm(); }},
                      variant_);
}

double JumpDensity::grad_log_sup() const {
    return std::visit(Overloaded{[](const ConstantDensity&) { return 0.0; },
                                 [](const TiltedSineDensity& d) { return d.eps * d.b.norm() / (1.0 - d.eps); }},
                      variant_);
}

double JumpDensity::intensity(const SpectralModel&) const {
    // The sine tilt is odd and mu is centered, so it integrates to zero.
    return lambda0();
}

double JumpDensity::second_moment(const SpectralModel& model) const {
    // The tilt term z^2 sin<b,z> is odd as well.
    return lambda0() * model.trace_q();
}

double JumpDensity::grad_abs_integral(const SpectralModel& model) const {
    return std::visit(Overloaded{[](const ConstantDensity&) { return 0.0; },
                                 [&](const TiltedSineDensity& d) {
                                     const double sigma2 = (d.b.array().square() * model.q().array()).sum();
                                     return d.lambda0 * d.eps * d.b.norm() * mean_abs_cos_gaussian(std::sqrt(sigma2));
                                 }},
                      variant_);
}

void JumpDensity::validate(const SpectralModel& model) const {
    if (const auto* d = std::get_if<TiltedSineDensity>(&variant_)) {
        require(d->b.size() == model.dim(), "tilted-sine direction b has the wrong dimension");
    }
}

int JumpPath::count_until(double t) const {
    int n = 0;
    for (const auto& e : events) {
        if (e.time > t) {
            break;
        }
        ++n;
    }
    return n;
}

HVector JumpPath::value_at(double t, int dim) const {
    HVector total = HVector::Zero(dim);
    for (const auto& e : events) {
        if (e.time > t) {
            break;
        }
        total += e.mark;
    }
    for (const auto& e : secondary_events) {
        if (e.time > t) {
            break;
        }
        total += e.mark;
    }
    return total;
}

double rho_eval(const JumpDensity& density, const HVector& z) { return density.rho(z); }

HVector grad_log_rho(const JumpDensity& density, const HVector& z) { return density.grad_log_rho(z); }

double intensity(const JumpDensity& density, const SpectralModel& model) {
    return density.intensity(model);
}

HVector sample_mark(const JumpDensity& density, const SpectralModel& model, Stream& stream) {
    HVector z(model.dim());
    if (density.is_constant()) {
        sample_mu_into(model, stream, z);
        return z;
    }
    const double envelope = density.rho_max();
    for (int attempt = 0; attempt < kRejectionGuard; ++attempt) {
        sample_mu_into(model, stream, z);
        if (stream.uniform() * envelope <= density.rho(z)) {
            return z;
        }
    }
    throw NumericalError("mark rejection sampler exceeded 1e6 proposals; rho_max / Lambda is too large");
}

namespace {

void append_poisson_events(double rate, double horizon, Stream& stream,
                           const std::function<HVector()>& draw_mark, std::vector<JumpEvent>& out) {
    double t = 0.0;
    while (true) {
        t += stream.exponential() / rate;
        if (t > horizon) {
            break;
        }
        out.push_back(JumpEvent{t, draw_mark()});
    }
}

}  // namespace

JumpPath sample_jump_path(const JumpDensity& density, const SpectralModel& model,
                          const SecondaryNoiseSpec& secondary, double horizon, Stream& stream) {
    require(horizon > 0.0, "path horizon must be positive");
    density.validate(model);
    JumpPath path;
    path.horizon = horizon;
    const double rate = density.intensity(model);
    append_poisson_events(rate, horizon, stream, [&] { return sample_mark(density, model, stream); },
                          path.events);
    if (const auto* cp = std::get_if<CompoundPoissonNoise>(&secondary)) {
        require(cp->rate > 0.0 && cp->mark_scale > 0.0, "secondary noise needs positive rate and scale");
        Stream side = stream.substream(kSecondaryNoise);
        append_poisson_events(cp->rate, horizon, side,
                              [&] { return HVector(cp->mark_scale * sample_mu(model, side)); },
                              path.secondary_events);
    }
    return path;
}

CompensatorMoments compensator_moments(const JumpDensity& density, const SpectralModel& model) {
    density.validate(model);
    return std::visit(
        Overloaded{[&](const ConstantDensity&) {
                       return CompensatorMoments{HVector::Zero(model.dim()), HVector::Zero(model.dim())};
                   },
                   [&](const TiltedSineDensity& d) {
                       const double sigma2 = (d.b.array().square() * model.q().array()).sum();
                       const double scale = d.lambda0 * d.eps * std::exp(-0.5 * sigma2);
                       return CompensatorMoments{HVector(scale * model.q().cwiseProduct(d.b)),
                                                 HVector(scale * d.b)};
                   }},
        density.variant());
}

}  // namespace jumplab
