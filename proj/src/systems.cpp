#include "ulamsteer/systems.hpp"

#include "ulamsteer/error.hpp"

#include <cmath>
#include <numbers>

namespace ulamsteer {

State SystemMap::apply_clamp(std::span<const double> x, State image) const {
    if (clamp_ && !domain_.contains(image)) return State(x.begin(), x.end());
    return image;
}

State SystemMap::step(std::span<const double> x, std::span<const double> u) const {
    if (x.size() != state_dim()) throw InvalidArgument("state has wrong dimension");
    if (u.size() != control_dim_) throw InvalidArgument("control has wrong dimension");
    return apply_clamp(x, raw_step(x, u));
}

void SystemMap::step_all(std::span<const double> x, const ControlGrid& controls,
                         std::vector<State>& out) const {
    out.resize(controls.size());
    for (std::size_t k = 0; k < controls.size(); ++k) out[k] = step(x, controls[k]);
}

State TranslationSystem::raw_step(std::span<const double> x, std::span<const double> u) const {
    State y(x.begin(), x.end());
    for (std::size_t d = 0; d < y.size(); ++d) y[d] += u[d];
    return y;
}

DoubleIntegrator::DoubleIntegrator(Box domain, bool clamp, double drift)
    : SystemMap(std::move(domain), 1, clamp), drift_(drift) {
    if (state_dim() != 2) throw InvalidArgument("double integrator needs a 2-D domain");
}

State DoubleIntegrator::raw_step(std::span<const double> x, std::span<const double> u) const {
    return {x[0] + drift_ * x[1], x[1] + u[0]};
}

void DoubleGyreParams::validate() const {
    if (!(tau > 0.0)) throw InvalidArgument("double gyre: tau must be positive");
    if (rk4_steps < 1) throw InvalidArgument("double gyre: rk4_steps must be >= 1");
}

std::array<double, 2> gyre_velocity(std::span<const double> p, double t,
                                    const DoubleGyreParams& params) {
    using std::numbers::pi;
    const double x = p[0];
    const double y = p[1];
    const double a = params.beta * std::sin(params.omega * t);
    const double f = a * x * x + (1.0 - 2.0 * a) * x;
    const double dfdx = 2.0 * a * x + (1.0 - 2.0 * a);
    return {-pi * params.A * std::sin(pi * f) * std::cos(pi * y),
            pi * params.A * std::cos(pi * f) * std::sin(pi * y) * dfdx};
}

std::array<double, 2> gyre_flow(std::span<const double> p, const DoubleGyreParams& params) {
    const double h = params.tau / params.rk4_steps;
    std::array<double, 2> z{p[0], p[1]};
    for (int s = 0; s < params.rk4_steps; ++s) {
        const double t = s * h;
        const auto k1 = gyre_velocity(z, t, params);
        const std::array<double, 2> z2{z[0] + 0.5 * h * k1[0], z[1] + 0.5 * h * k1[1]};
        const auto k2 = gyre_velocity(z2, t + 0.5 * h, params);
        const std::array<double, 2> z3{z[0] + 0.5 * h * k2[0], z[1] + 0.5 * h * k2[1]};
        const auto k3 = gyre_velocity(z3, t + 0.5 * h, params);
        const std::array<double, 2> z4{z[0] + h * k3[0], z[1] + h * k3[1]};
        const auto k4 = gyre_velocity(z4, t + h, params);
        z[0] += h / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]);
        z[1] += h / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]);
    }
    return z;
}

GyreUnicycle::GyreUnicycle(Box domain, DoubleGyreParams params, bool clamp)
    : SystemMap(std::move(domain), 2, clamp), params_(params) {
    if (state_dim() != 2) throw InvalidArgument("gyre unicycle needs a 2-D domain");
    params_.validate();
}

State GyreUnicycle::raw_step(std::span<const double> x, std::span<const double> u) const {
    const auto f = gyre_flow(x, params_);
    return {f[0] + u[0] * std::cos(u[1]), f[1] + u[0] * std::sin(u[1])};
}

void GyreUnicycle::step_all(std::span<const double> x, const ControlGrid& controls,
                            std::vector<State>& out) const {
    if (x.size() != 2 || controls.dim() != 2)
        throw InvalidArgument("gyre unicycle expects 2-D states and controls");
    const auto f = gyre_flow(x, params_);
    out.resize(controls.size());
    for (std::size_t k = 0; k < controls.size(); ++k) {
        const auto& u = controls[k];
        out[k] = apply_clamp(x, {f[0] + u[0] * std::cos(u[1]), f[1] + u[0] * std::sin(u[1])});
    }
}

} // namespace ulamsteer
