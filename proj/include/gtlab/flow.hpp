#pragma once

/** \file flow.hpp
 *  Isokinetic (Gaussian thermostat) flow on the unit tangent bundle of a
 *  conformal torus: RHS evaluation, fixed-step RK4 orbits, Fermi frames.
 */

#include <functional>
#include <vector>

#include "gtlab/geometry.hpp"

namespace gtlab::flow {

using geom::ChartPoint;
using geom::Vec2;

struct Scenario {
    geom::ConformalMetric metric;
    geom::ClosedFormField field;
};

struct UnitTangentState {
    ChartPoint p;
    Vec2 v = Vec2::Zero();
};

struct StepTooLarge : std::runtime_error {
    explicit StepTooLarge(const std::string& w) : std::runtime_error(w) {}
};

struct RhsEval {
    Vec2 pdot;
    Vec2 vdot;
};

/// pdot = v; vdot^k = -Gamma^k_ij v^i v^j + E^k - gamma(v) v^k.
/// gamma(v) is divided by g(v,v) so every speed level is invariant.
RhsEval thermostat_rhs(const Scenario& sc, const UnitTangentState& s);

/// One classical RK4 step of size h (h may be negative).
UnitTangentState rk4_step(const Scenario& sc, const UnitTangentState& s, double h);

struct IntegrateOptions {
    bool renormalize = false;   ///< per-step rescale of v to unit g-norm
    double drift_abort = 1e-3;  ///< abort threshold on |g(v,v)-1|
};

struct OrbitSegment {
    std::vector<double> times;
    std::vector<UnitTangentState> states;  ///< positions unwrapped (winding kept)
    std::vector<Vec2> frames;              ///< e1(t), filled by fermi_frame
    std::vector<double> sigma;             ///< -gamma(v) per sample
    std::vector<double> energy;            ///< g(v,v) per sample
    double max_energy_drift = 0.0;
    bool renormalized = false;
    double step = 0.0;  ///< signed step actually used

    size_t size() const { return times.size(); }
    const UnitTangentState& back() const { return states.back(); }
};

/// Fixed-step RK4 over duration T (T < 0 integrates backward); stores every
/// step. Positions are accumulated unwrapped; evaluation wraps internally.
OrbitSegment integrate_orbit(const Scenario& sc, const UnitTangentState& s0,
                             double T, double h, IntegrateOptions opts = {});

/// Parallel transport + per-step projection to the g-normal of v; on an
/// oriented surface the projected transport equals the 90-degree g-rotation
/// of v, which is asserted during the sweep.
void fermi_frame(const Scenario& sc, OrbitSegment& orbit);

/// Raw parallel transport (no projection) of w0 along an explicit curve
/// t -> (c(t), cdot(t)); RK4 with the supplied number of steps.
Vec2 transport_along(const geom::ConformalMetric& m,
                     const std::function<void(double, ChartPoint&, Vec2&)>& curve,
                     double t0, double t1, int steps, const Vec2& w0);

}  // namespace gtlab::flow
