#pragma once

#include "ulamsteer/grid.hpp"

#include <array>
#include <memory>
#include <span>
#include <string>
#include <string_view>

namespace ulamsteer {

/// Deterministic discrete-time control system x' = T(x, u) on a box.
///
/// With clamping enabled, an image that leaves the box is replaced by the
/// pre-image state, so step() is total on the box.
class SystemMap {
public:
    SystemMap(Box domain, std::size_t control_dim, bool clamp)
        : domain_(std::move(domain)), control_dim_(control_dim), clamp_(clamp) {}
    virtual ~SystemMap() = default;

    virtual std::string_view name() const = 0;

    const Box& domain() const { return domain_; }
    std::size_t state_dim() const { return domain_.dim(); }
    std::size_t control_dim() const { return control_dim_; }
    bool clamping() const { return clamp_; }

    State step(std::span<const double> x, std::span<const double> u) const;

    // Images of one state under every control of the grid. Systems whose
    // drift does not depend on u override this to share the drift.
    virtual void step_all(std::span<const double> x, const ControlGrid& controls,
                          std::vector<State>& out) const;

protected:
    virtual State raw_step(std::span<const double> x, std::span<const double> u) const = 0;
    State apply_clamp(std::span<const double> x, State image) const;

private:
    Box domain_;
    std::size_t control_dim_;
    bool clamp_;
};

// x' = x + u, any dimension (control dimension equals state dimension).
class TranslationSystem final : public SystemMap {
public:
    TranslationSystem(Box domain, bool clamp) : SystemMap(domain, domain.dim(), clamp) {}
    std::string_view name() const override { return "translation"; }

protected:
    State raw_step(std::span<const double> x, std::span<const double> u) const override;
};

// x' = x + drift * y, y' = y + u.
class DoubleIntegrator final : public SystemMap {
public:
    static constexpr double kDefaultDrift = 0.15;

    explicit DoubleIntegrator(Box domain, bool clamp = true, double drift = kDefaultDrift);
    std::string_view name() const override { return "double_integrator"; }
    double drift() const { return drift_; }

protected:
    State raw_step(std::span<const double> x, std::span<const double> u) const override;

private:
    double drift_;
};

struct DoubleGyreParams {
    double A = 0.25;
    double beta = 0.25;
    double omega = 2.0 * 3.14159265358979323846;
    double tau = 1.0;
    int rk4_steps = 100;

    void validate() const;
};

// Velocity of the time-periodic double-gyre flow at point p and time t.
std::array<double, 2> gyre_velocity(std::span<const double> p, double t,
                                    const DoubleGyreParams& params);

// Flow of the double gyre from t = 0 to t = tau by fixed-step RK4.
std::array<double, 2> gyre_flow(std::span<const double> p, const DoubleGyreParams& params);

/// Unicycle drifting in a double gyre: x' = F(x) + G(u), with F the
/// stroboscopic flow map and G(u) = (u1 cos u2, u1 sin u2).
class GyreUnicycle final : public SystemMap {
public:
    GyreUnicycle(Box domain, DoubleGyreParams params, bool clamp = true);
    std::string_view name() const override { return "gyre_unicycle"; }
    const DoubleGyreParams& params() const { return params_; }

    void step_all(std::span<const double> x, const ControlGrid& controls,
                  std::vector<State>& out) const override;

protected:
    State raw_step(std::span<const double> x, std::span<const double> u) const override;

private:
    DoubleGyreParams params_;
};

} // namespace ulamsteer
