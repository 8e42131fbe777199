#include "jumplab/config.hpp"

#include "jumplab/csv.hpp"
#include "jumplab/error.hpp"

#include <toml.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace jumplab {

namespace {

class Reader {
public:
    Reader(const toml::table& root, std::vector<std::string>& errors) : root_(root), errors_(errors) {}

    // Starts a section; keys read from it are remembered for the unknown-key check.
    bool section(std::string_view name) {
        name_ = std::string(name);
        current_ = nullptr;
        used_.clear();
        const toml::node* node = root_.get(name);
        if (node == nullptr) {
            return false;
        }
        current_ = node->as_table();
        if (current_ == nullptr) {
            errors_.push_back("[" + name_ + "] must be a table");
        }
        return current_ != nullptr;
    }

    void finish() {
        if (current_ == nullptr) {
            return;
        }
        for (const auto& [key, value] : *current_) {
            if (!used_.count(std::string(key.str()))) {
                errors_.push_back("unknown key " + name_ + "." + std::string(key.str()));
            }
        }
    }

    void number(std::string_view key, double& out) {
        if (const auto* n = find(key)) {
            if (auto v = n->value<double>(); v && (n->is_floating_point() || n->is_integer())) {
                out = *v;
            } else {
                bad(key, "a number");
            }
        }
    }

    void optional_number(std::string_view key, std::optional<double>& out) {
        if (const auto* n = find(key)) {
            if (auto v = n->value<double>(); v && (n->is_floating_point() || n->is_integer())) {
                out = *v;
            } else {
                bad(key, "a number");
            }
        } else if (current_ != nullptr) {
            out.reset();
        }
    }

    template <class Int>
    void integer(std::string_view key, Int& out) {
        if (const auto* n = find(key)) {
            const auto v = n->value<std::int64_t>();
            if (v && n->is_integer() && *v >= 0) {
                out = static_cast<Int>(*v);
            } else {
                bad(key, "a nonnegative integer");
            }
        }
    }

    void text(std::string_view key, std::string& out) {
        if (const auto* n = find(key)) {
            if (auto v = n->value<std::string>()) {
                out = *v;
            } else {
                bad(key, "a string");
            }
        }
    }

    void boolean(std::string_view key, bool& out) {
        if (const auto* n = find(key)) {
            if (auto v = n->value<bool>()) {
                out = *v;
            } else {
                bad(key, "a boolean");
            }
        }
    }

    void numbers(std::string_view key, std::vector<double>& out) {
        const auto* n = find(key);
        if (n == nullptr) {
            return;
        }
        const auto* arr = n->as_array();
        if (arr == nullptr) {
            bad(key, "an array of numbers");
            return;
        }
        std::vector<double> values;
        for (const auto& item : *arr) {
            auto v = item.value<double>();
            if (!v || !(item.is_floating_point() || item.is_integer())) {
                bad(key, "an array of numbers");
                return;
            }
            values.push_back(*v);
        }
        out = std::move(values);
    }

private:
    const toml::node* find(std::string_view key) {
        if (current_ == nullptr) {
            return nullptr;
        }
        used_.insert(std::string(key));
        return current_->get(key);
    }

    void bad(std::string_view key, std::string_view what) {
        errors_.push_back(name_ + "." + std::string(key) + " must be " + std::string(what));
    }

    const toml::table& root_;
    std::vector<std::string>& errors_;
    std::string name_;
    const toml::table* current_ = nullptr;
    std::set<std::string> used_;
};

std::string number_text(double v) {
    std::string s = format_double(v);
    if (s.find_first_of(".eEn") == std::string::npos) {
        s += ".0";
    }
    return s;
}

std::string list_text(const std::vector<double>& v) {
    std::string out = "[";
    for (std::size_t i = 0; i < v.size(); ++i) {
        out += (i ? ", " : "") + number_text(v[i]);
    }
    return out + "]";
}

std::string quoted(const std::string& s) { return "\"" + s + "\""; }

bool increasing_positive(const std::vector<double>& v) {
    if (v.empty()) {
        return false;
    }
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (!(v[i] > 0.0) || !std::isfinite(v[i]) || (i > 0 && !(v[i] > v[i - 1]))) {
            return false;
        }
    }
    return true;
}

}  // namespace

std::vector<std::string> config_violations(const ExperimentConfig& cfg) {
    std::vector<std::string> out;
    const auto& sp = cfg.space;
    if (sp.dim < 1) {
        out.push_back("(H3) space.dim must be a positive integer");
    }
    if (!(sp.gamma_scale > 0.0) || !std::isfinite(sp.gamma_scale)) {
        out.push_back("(H3) space.gamma_scale must be positive, so that gamma_1 > 0");
    }
    if (!(sp.gamma_power >= 0.0) || !std::isfinite(sp.gamma_power)) {
        out.push_back("(H3) space.gamma_power must be nonnegative, so that gamma is nondecreasing");
    }
    if (sp.frac_delta) {
        if (!(*sp.frac_delta > 0.0 && *sp.frac_delta < 0.5)) {
            out.push_back("(H2) space.frac_delta must lie in (0, 1/2)");
        }
    } else {
        if (static_cast<int>(sp.q.size()) != sp.dim) {
            out.push_back("(H2) space.q must list dim covariance eigenvalues when frac_delta is absent");
        }
        if (std::any_of(sp.q.begin(), sp.q.end(), [](double q) { return !(q > 0.0) || !std::isfinite(q); })) {
            out.push_back("(H2) space.q entries must be positive");
        }
    }

    const auto& no = cfg.noise;
    if (no.density != "constant" && no.density != "tilted_sine") {
        out.push_back("(H1) noise.density must be \"constant\" or \"tilted_sine\"");
    }
    if (!(no.lambda0 > 0.0) || !std::isfinite(no.lambda0)) {
        out.push_back("(H1) noise.lambda0 must be positive");
    }
    if (!(no.eps > 0.0 && no.eps < 1.0)) {
        out.push_back("(H1) noise.eps must lie in (0, 1) so that rho is bounded below");
    }
    if (static_cast<int>(no.b.size()) > sp.dim) {
        out.push_back("(H1) noise.b has more entries than space.dim");
    }
    if (std::any_of(no.b.begin(), no.b.end(), [](double b) { return !std::isfinite(b); })) {
        out.push_back("(H1) noise.b entries must be finite");
    }
    if (no.secondary != "none" && no.secondary != "compound_poisson") {
        out.push_back("noise.secondary must be \"none\" or \"compound_poisson\"");
    }
    if (!(no.secondary_rate > 0.0) || !(no.secondary_mark_scale > 0.0)) {
        out.push_back("noise.secondary_rate and noise.secondary_mark_scale must be positive");
    }

    const auto& dr = cfg.drift;
    if (dr.kind != "zero" && dr.kind != "tanh") {
        out.push_back("(H4) drift.kind must be \"zero\" or \"tanh\"");
    }
    if (!(dr.lipschitz >= 0.0) || !std::isfinite(dr.lipschitz)) {
        out.push_back("(H4) drift.lipschitz must be a nonnegative Lipschitz constant");
    }
    const double lip = dr.kind == "zero" ? 0.0 : dr.lipschitz;
    if (sp.gamma_scale > 0.0 && !(sp.gamma_scale > lip)) {
        out.push_back("(H3/H4) gamma_1 > ||F||_Lip is required for the convergence experiments");
    }

    const auto& si = cfg.sim;
    if (!(si.dt >= 0.0) || !std::isfinite(si.dt)) {
        out.push_back("sim.dt must be positive (or 0 for the default)");
    }
    if (!(si.t > 0.0)) {
        out.push_back("sim.t must be positive");
    }
    if (!(si.fd_eps >= 1e-4 && si.fd_eps <= 1e-1)) {
        out.push_back("sim.fd_eps must lie in [1e-4, 1e-1]");
    }
    if (!(si.separation > 0.0)) {
        out.push_back("sim.separation must be positive");
    }
    if (!increasing_positive(si.tv_checkpoints) || !increasing_positive(si.contraction_checkpoints) ||
        !increasing_positive(si.gradient_times)) {
        out.push_back("sim checkpoint lists must be positive and increasing");
    }

    const auto& mc = cfg.mc;
    if (mc.samples < 1000 || mc.contraction_samples < 1000 || mc.gradient_bound_samples < 1000) {
        out.push_back("mc sample counts must be at least 1000");
    }
    if (mc.tv_samples < 10000) {
        out.push_back("mc.tv_samples must be at least 10000");
    }
    if (mc.jacobian_paths < 1) {
        out.push_back("mc.jacobian_paths must be positive");
    }
    if (mc.probes < 1) {
        out.push_back("mc.probes must be positive");
    }
    if (mc.tv_coupling != "coupled" && mc.tv_coupling != "independent") {
        out.push_back("mc.tv_coupling must be \"coupled\" or \"independent\"");
    }
    return out;
}

void validate_config(const ExperimentConfig& cfg) {
    const auto violations = config_violations(cfg);
    if (violations.empty()) {
        return;
    }
    std::string msg = "invalid configuration:";
    for (const auto& v : violations) {
        msg += "\n  " + v;
    }
    throw DomainError(msg);
}

ExperimentConfig parse_config(std::string_view text) {
    toml::table root;
    try {
        root = toml::parse(text);
    } catch (const toml::parse_error& e) {
        std::ostringstream msg;
        msg << "config is not valid TOML: " << e.description() << " at line " << e.source().begin.line;
        throw DomainError(msg.str());
    }
    ExperimentConfig cfg;
    std::vector<std::string> errors;
    Reader r(root, errors);
    static const std::set<std::string> sections{"space", "noise", "drift", "sim", "mc", "flags"};
    for (const auto& [key, value] : root) {
        if (!sections.count(std::string(key.str()))) {
            errors.push_back("unknown section [" + std::string(key.str()) + "]");
        }
    }
    if (r.section("space")) {
        std::int64_t dim = cfg.space.dim;
        r.integer("dim", dim);
        cfg.space.dim = static_cast<int>(dim);
        r.number("gamma_scale", cfg.space.gamma_scale);
        r.number("gamma_power", cfg.space.gamma_power);
        r.optional_number("frac_delta", cfg.space.frac_delta);
        r.numbers("q", cfg.space.q);
        r.finish();
    }
    if (r.section("noise")) {
        r.text("density", cfg.noise.density);
        r.number("lambda0", cfg.noise.lambda0);
        r.number("eps", cfg.noise.eps);
        r.numbers("b", cfg.noise.b);
        r.text("secondary", cfg.noise.secondary);
        r.number("secondary_rate", cfg.noise.secondary_rate);
        r.number("secondary_mark_scale", cfg.noise.secondary_mark_scale);
        r.finish();
    }
    if (r.section("drift")) {
        r.text("kind", cfg.drift.kind);
        r.number("lipschitz", cfg.drift.lipschitz);
        r.integer("weights_seed", cfg.drift.weights_seed);
        r.finish();
    }
    if (r.section("sim")) {
        r.number("dt", cfg.sim.dt);
        r.number("t", cfg.sim.t);
        r.number("fd_eps", cfg.sim.fd_eps);
        r.number("separation", cfg.sim.separation);
        r.numbers("tv_checkpoints", cfg.sim.tv_checkpoints);
        r.numbers("contraction_checkpoints", cfg.sim.contraction_checkpoints);
        r.numbers("gradient_times", cfg.sim.gradient_times);
        r.finish();
    }
    if (r.section("mc")) {
        r.integer("samples", cfg.mc.samples);
        r.integer("seed", cfg.mc.seed);
        r.integer("workers", cfg.mc.workers);
        r.integer("tv_samples", cfg.mc.tv_samples);
        r.integer("contraction_samples", cfg.mc.contraction_samples);
        r.integer("gradient_bound_samples", cfg.mc.gradient_bound_samples);
        r.integer("jacobian_paths", cfg.mc.jacobian_paths);
        r.integer("probes", cfg.mc.probes);
        r.text("tv_coupling", cfg.mc.tv_coupling);
        r.finish();
    }
    if (r.section("flags")) {
        r.boolean("paper_sign", cfg.flags.paper_sign);
        r.finish();
    }
    if (!errors.empty()) {
        std::string msg = "invalid configuration:";
        for (const auto& e : errors) {
            msg += "\n  " + e;
        }
        throw DomainError(msg);
    }
    validate_config(cfg);
    return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw DomainError("cannot read config file " + path.string());
    }
    std::ostringstream text;
    text << in.rdbuf();
    return parse_config(text.str());
}

std::string serialize_config(const ExperimentConfig& cfg) {
    std::ostringstream out;
    out << "[space]\n"
        << "dim = " << cfg.space.dim << "\n"
        << "gamma_scale = " << number_text(cfg.space.gamma_scale) << "\n"
        << "gamma_power = " << number_text(cfg.space.gamma_power) << "\n";
    if (cfg.space.frac_delta) {
        out << "frac_delta = " << number_text(*cfg.space.frac_delta) << "\n";
    }
    if (!cfg.space.q.empty()) {
        out << "q = " << list_text(cfg.space.q) << "\n";
    }
    out << "\n[noise]\n"
        << "density = " << quoted(cfg.noise.density) << "\n"
        << "lambda0 = " << number_text(cfg.noise.lambda0) << "\n"
        << "eps = " << number_text(cfg.noise.eps) << "\n"
        << "b = " << list_text(cfg.noise.b) << "\n"
        << "secondary = " << quoted(cfg.noise.secondary) << "\n"
        << "secondary_rate = " << number_text(cfg.noise.secondary_rate) << "\n"
        << "secondary_mark_scale = " << number_text(cfg.noise.secondary_mark_scale) << "\n";
    out << "\n[drift]\n"
        << "kind = " << quoted(cfg.drift.kind) << "\n"
        << "lipschitz = " << number_text(cfg.drift.lipschitz) << "\n"
        << "weights_seed = " << cfg.drift.weights_seed << "\n";
    out << "\n[sim]\n"
        << "dt = " << number_text(cfg.sim.dt) << "\n"
        << "t = " << number_text(cfg.sim.t) << "\n"
        << "fd_eps = " << number_text(cfg.sim.fd_eps) << "\n"
        << "separation = " << number_text(cfg.sim.separation) << "\n"
        << "tv_checkpoints = " << list_text(cfg.sim.tv_checkpoints) << "\n"
        << "contraction_checkpoints = " << list_text(cfg.sim.contraction_checkpoints) << "\n"
        << "gradient_times = " << list_text(cfg.sim.gradient_times) << "\n";
    out << "\n[mc]\n"
        << "samples = " << cfg.mc.samples << "\n"
        << "seed = " << cfg.mc.seed << "\n"
        << "workers = " << cfg.mc.workers << "\n"
        << "tv_samples = " << cfg.mc.tv_samples << "\n"
        << "contraction_samples = " << cfg.mc.contraction_samples << "\n"
        << "gradient_bound_samples = " << cfg.mc.gradient_bound_samples << "\n"
        << "jacobian_paths = " << cfg.mc.jacobian_paths << "\n"
        << "probes = " << cfg.mc.probes << "\n"
        << "tv_coupling = " << quoted(cfg.mc.tv_coupling) << "\n";
    out << "\n[flags]\n"
        << "paper_sign = " << (cfg.flags.paper_sign ? "true" : "false") << "\n";
    return out.str();
}

void override_samples(ExperimentConfig& cfg, std::uint64_t n) {
    auto& mc = cfg.mc;
    mc.samples = n;
    mc.contraction_samples = std::min(mc.contraction_samples, n);
    mc.gradient_bound_samples = std::min(mc.gradient_bound_samples, n);
    mc.jacobian_paths = std::min(mc.jacobian_paths, n);
    mc.tv_samples = std::max<std::uint64_t>(std::min(mc.tv_samples, n), 10000);
}

SpectralModel build_model(const ExperimentConfig& cfg) {
    auto gamma = SpectralModel::power_law_gamma(cfg.space.dim, cfg.space.gamma_scale, cfg.space.gamma_power);
    if (cfg.space.frac_delta) {
        return SpectralModel::fractional(std::move(gamma), *cfg.space.frac_delta);
    }
    return SpectralModel(std::move(gamma), cfg.space.q);
}

HVector build_tilt(const ExperimentConfig& cfg) {
    HVector b = HVector::Zero(cfg.space.dim);
    for (std::size_t k = 0; k < cfg.noise.b.size() && static_cast<int>(k) < cfg.space.dim; ++k) {
        b(static_cast<Eigen::Index>(k)) = cfg.noise.b[k];
    }
    return b;
}

JumpDensity build_constant_density(const ExperimentConfig& cfg) { return ConstantDensity{cfg.noise.lambda0}; }

JumpDensity build_tilted_density(const ExperimentConfig& cfg) {
    return TiltedSineDensity{cfg.noise.lambda0, cfg.noise.eps, build_tilt(cfg)};
}

JumpDensity build_density(const ExperimentConfig& cfg) {
    return cfg.noise.density == "constant" ? build_constant_density(cfg) : build_tilted_density(cfg);
}

DriftField build_drift(const ExperimentConfig& cfg, const SpectralModel& model) {
    if (cfg.drift.kind == "zero") {
        return ZeroDrift{};
    }
    return DriftField::random_tanh(model.dim(), cfg.drift.lipschitz, cfg.drift.weights_seed);
}

Dynamics build_dynamics(const ExperimentConfig& cfg) {
    validate_config(cfg);
    SpectralModel model = build_model(cfg);
    DriftField drift = build_drift(cfg, model);
    SecondaryNoiseSpec secondary = NoSecondaryNoise{};
    if (cfg.noise.secondary == "compound_poisson") {
        secondary = CompoundPoissonNoise{cfg.noise.secondary_rate, cfg.noise.secondary_mark_scale};
    }
    const double dt = cfg.sim.dt > 0.0 ? cfg.sim.dt : default_dt(model);
    return Dynamics{std::move(model), build_density(cfg), std::move(drift), secondary, dt,
                    cfg.flags.paper_sign ? CmSign::Paper : CmSign::Corrected};
}

McOptions build_mc(const ExperimentConfig& cfg, std::uint64_t samples) {
    return McOptions{samples, RngPolicy{cfg.mc.seed}, cfg.mc.workers};
}

TvOptions build_tv_options(const ExperimentConfig& cfg) {
    TvOptions tv;
    tv.coupling = cfg.mc.tv_coupling == "independent" ? TvCoupling::Independent : TvCoupling::Coupled;
    return tv;
}

ExperimentConfig with_dim(const ExperimentConfig& cfg, int dim) {
    ExperimentConfig out = cfg;
    out.space.dim = dim;
    if (!out.space.frac_delta) {
        out.space.q.resize(static_cast<std::size_t>(dim), out.space.q.empty() ? 1.0 : out.space.q.back());
    }
    return out;
}

}  // namespace jumplab
