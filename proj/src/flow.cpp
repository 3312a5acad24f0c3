#include "gtlab/flow.hpp"

#include <cmath>

namespace gtlab::flow {

RhsEval thermostat_rhs(const Scenario& sc, const UnitTangentState& s) {
    ChartPoint p = s.p.canonical();
    geom::Christoffels c = geom::christoffel_eval(sc.metric, p);
    geom::FieldEval fe = geom::field_eval(sc.field, sc.metric, p, s.v);
    double speed2 = fe.e2f * s.v.squaredNorm();
    double rate = fe.gamma_of_v / speed2;
    RhsEval out;
    out.pdot = s.v;
    for (int k = 0; k < 2; ++k) {
        double acc = fe.E[k] - rate * s.v[k];
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j) acc -= c.g[k][i][j] * s.v[i] * s.v[j];
        out.vdot[k] = acc;
    }
    return out;
}

UnitTangentState rk4_step(const Scenario& sc, const UnitTangentState& s, double h) {
    auto shift = [](const UnitTangentState& base, const RhsEval& d, double a) {
        UnitTangentState out;
        out.p = {base.p.x + a * d.pdot.x(), base.p.y + a * d.pdot.y()};
        out.v = base.v + a * d.vdot;
        return out;
    };
    RhsEval k1 = thermostat_rhs(sc, s);
    RhsEval k2 = thermostat_rhs(sc, shift(s, k1, h / 2));
    RhsEval k3 = thermostat_rhs(sc, shift(s, k2, h / 2));
    RhsEval k4 = thermostat_rhs(sc, shift(s, k3, h));
    UnitTangentState out;
    out.p = {s.p.x + h / 6.0 * (k1.pdot.x() + 2 * k2.pdot.x() + 2 * k3.pdot.x() + k4.pdot.x()),
             s.p.y + h / 6.0 * (k1.pdot.y() + 2 * k2.pdot.y() + 2 * k3.pdot.y() + k4.pdot.y())};
    out.v = s.v + h / 6.0 * (k1.vdot + 2 * k2.vdot + 2 * k3.vdot + k4.vdot);
    return out;
}

OrbitSegment integrate_orbit(const Scenario& sc, const UnitTangentState& s0,
                             double T, double h, IntegrateOptions opts) {
    if (!(h > 0.0)) throw std::invalid_argument("integrate_orbit: h must be positive");
    if (!std::isfinite(T)) throw std::invalid_argument("integrate_orbit: T must be finite");
    const double dir = (T < 0.0) ? -1.0 : 1.0;
    const double span = std::abs(T);
    long nsteps = static_cast<long>(std::llround(span / h));
    if (nsteps < 1) nsteps = 1;
    const double step = dir * span / static_cast<double>(nsteps);

    OrbitSegment orbit;
    orbit.step = step;
    orbit.renormalized = opts.renormalize;
    orbit.times.reserve(nsteps + 1);
    orbit.states.reserve(nsteps + 1);
    orbit.sigma.reserve(nsteps + 1);
    orbit.energy.reserve(nsteps + 1);

    UnitTangentState s = s0;
    for (long k = 0; k <= nsteps; ++k) {
        double t = static_cast<double>(k) * step;
        ChartPoint pc = s.p.canonical();
        geom::FieldEval fe = geom::field_eval(sc.field, sc.metric, pc, s.v);
        double en = fe.e2f * s.v.squaredNorm();
        double drift = std::abs(en - 1.0);
        orbit.max_energy_drift = std::max(orbit.max_energy_drift, drift);
        if (drift > opts.drift_abort)
            throw StepTooLarge("integrate_orbit: energy drift " + std::to_string(drift) +
                               " at t = " + std::to_string(t));
        orbit.times.push_back(t);
        orbit.states.push_back(s);
        orbit.sigma.push_back(-fe.gamma_of_v);
        orbit.energy.push_back(en);
        if (k == nsteps) break;
        s = rk4_step(sc, s, step);
        if (opts.renormalize) {
            double norm = sc.metric.norm(s.p.canonical(), s.v);
            s.v /= norm;
        }
    }
    return orbit;
}

void fermi_frame(const Scenario& sc, OrbitSegment& orbit) {
    const size_t n = orbit.size();
    orbit.frames.assign(n, Vec2::Zero());
    if (n == 0) return;
    auto unit_normal = [&](const UnitTangentState& s) -> Vec2 {
        Vec2 w = geom::ConformalMetric::rot90(s.v);
        return w / sc.metric.norm(s.p.canonical(), w);
    };
    Vec2 e1 = unit_normal(orbit.states[0]);
    orbit.frames[0] = e1;
    const double h = orbit.step;
    for (size_t k = 0; k + 1 < n; ++k) {
        const UnitTangentState& s = orbit.states[k];
        UnitTangentState mid = rk4_step(sc, s, h / 2.0);
        auto rhs = [&](const UnitTangentState& at, const Vec2& w) {
            geom::Christoffels c = geom::christoffel_eval(sc.metric, at.p.canonical());
            Vec2 out = Vec2::Zero();
            for (int a = 0; a < 2; ++a)
                for (int i = 0; i < 2; ++i)
                    for (int j = 0; j < 2; ++j) out[a] -= c.g[a][i][j] * at.v[i] * w[j];
            return out;
        };
        Vec2 k1 = rhs(s, e1);
        Vec2 k2 = rhs(mid, e1 + h / 2.0 * k1);
        Vec2 k3 = rhs(mid, e1 + h / 2.0 * k2);
        Vec2 k4 = rhs(orbit.states[k + 1], e1 + h * k3);
        Vec2 w = e1 + h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4);

        const UnitTangentState& nx = orbit.states[k + 1];
        ChartPoint pc = nx.p.canonical();
        Vec2 ref = unit_normal(nx);
        double along = sc.metric.inner(pc, w, ref);
        if (!(along > 0.0))
            throw StepTooLarge("fermi_frame: transported frame flipped across v");
        e1 = ref;  // projection of w onto the 1-dimensional g-normal line of v
        orbit.frames[k + 1] = e1;
    }
}

Vec2 transport_along(const geom::ConformalMetric& m,
                     const std::function<void(double, ChartPoint&, Vec2&)>& curve,
                     double t0, double t1, int steps, const Vec2& w0) {
    if (steps < 1) throw std::invalid_argument("transport_along: steps must be >= 1");
    const double h = (t1 - t0) / steps;
    auto rhs = [&](double t, const Vec2& w) {
        ChartPoint c;
        Vec2 cdot;
        curve(t, c, cdot);
        geom::Christoffels g = geom::christoffel_eval(m, c.canonical());
        Vec2 out = Vec2::Zero();
        for (int a = 0; a < 2; ++a)
            for (int i = 0; i < 2; ++i)
                for (int j = 0; j < 2; ++j) out[a] -= g.g[a][i][j] * cdot[i] * w[j];
        return out;
    };
    Vec2 w = w0;
    for (int k = 0; k < steps; ++k) {
        double t = t0 + k * h;
        Vec2 k1 = rhs(t, w);
        Vec2 k2 = rhs(t + h / 2, w + h / 2 * k1);
        Vec2 k3 = rhs(t + h / 2, w + h / 2 * k2);
        Vec2 k4 = rhs(t + h, w + h * k3);
        w += h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4);
    }
    return w;
}

}  // namespace gtlab::flow
