#pragma once

// Shared fixtures: scenario builders, unit-state helper, random CS matrices,
// and the ten-entry regression suite used by the analysis tests and the
// acceptance runner.

#include <random>
#include <utility>
#include <vector>

#include <unsupported/Eigen/MatrixFunctions>

#include <gtlab/cs_linalg.hpp>
#include <gtlab/flow.hpp>

namespace testutil {

using gtlab::flow::Scenario;
using gtlab::flow::UnitTangentState;
using gtlab::geom::TrigPoly;
using gtlab::geom::TrigTerm;
using gtlab::geom::Vec2;

inline Scenario make_sc(std::vector<TrigTerm> f, double c1, double c2,
                        std::vector<TrigTerm> u) {
    Scenario sc;
    sc.metric = gtlab::geom::ConformalMetric(TrigPoly(std::move(f)));
    sc.field = gtlab::geom::ClosedFormField(c1, c2, TrigPoly(std::move(u)));
    return sc;
}

/// Unit tangent state with v the g-normalization of (vx, vy).
inline UnitTangentState st(const Scenario& sc, double x, double y, double vx,
                           double vy) {
    UnitTangentState s;
    s.p = {x, y};
    Vec2 raw(vx, vy);
    s.v = raw / sc.metric.norm(s.p, raw);
    return s;
}

/// Deterministic uniform in [0,1) from raw mt19937_64 output.
struct Rand {
    std::mt19937_64 g;
    explicit Rand(unsigned long long seed) : g(seed) {}
    double uniform() { return (g() >> 11) * 0x1.0p-53; }
    double sym(double scale = 1.0) { return scale * (2.0 * uniform() - 1.0); }
};

/// Random conformally symplectic matrix c * exp(J S), S symmetric: exp(JS) is
/// symplectic, the scalar supplies the conformal factor c^2.
inline Eigen::MatrixXd random_cs(Rand& rng, int n, double spread = 0.6) {
    int d = 2 * n;
    Eigen::MatrixXd S(d, d);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j <= i; ++j) S(i, j) = S(j, i) = rng.sym(spread);
    Eigen::MatrixXd J = gtlab::cs::canonical_j(n);
    double c = std::exp(rng.sym(0.5));
    return c * (J * S).exp();
}

/// Ten regression scenarios with transversal initial states; shared by the
/// pairing and oracle-equivalence sweeps.
inline std::vector<std::pair<Scenario, UnitTangentState>> regression_suite() {
    std::vector<std::pair<Scenario, UnitTangentState>> v;
    auto add = [&](Scenario sc, double x, double y, double vx, double vy) {
        auto s = st(sc, x, y, vx, vy);
        v.push_back({std::move(sc), s});
    };
    add(make_sc({}, 0, 0, {}), 0.1, 0.2, 1.0, 0.7);
    add(make_sc({}, 0.5, 0, {}), 0.0, 0.25, 1.0, 0.0);
    add(make_sc({}, 1.0, 0, {}), 0.3, 0.6, -0.2, 1.0);
    add(make_sc({{0.05, false, 1, 1}, {0.03, true, 0, 1}}, 0.3, -0.2,
                {{0.04, true, 1, -1}, {0.02, false, 2, 1}}),
        0.15, 0.62, 0.2, 1.0);
    add(make_sc({{0.08, false, 1, 0}, {0.05, true, 0, 1}}, 0, 0, {}), 0.4, 0.1, 1.0,
        0.3);
    add(make_sc({}, 0, 0, {{0.1, false, 1, 0}, {0.07, true, 1, 1}}), 0.8, 0.45, 0.6,
        -1.0);
    add(make_sc({{0.012, false, 0, 1}}, 0, 0, {}), 0.0, 0.5, 1.0, 0.0);
    add(make_sc({{0.06, false, 1, -1}}, 0.4, 0.1, {{0.05, true, 0, 1}}), 0.25, 0.75,
        -1.0, 0.4);
    add(make_sc({{0.04, true, 1, 0}, {0.04, false, 0, 1}}, -0.3, 0.25,
                {{0.03, false, 2, 1}}),
        0.55, 0.35, 0.7, 0.9);
    add(make_sc({{0.05, false, 0, 1}}, 0.8, 0, {}), 0.05, 0.85, 1.0, -0.5);
    return v;
}

}  // namespace testutil
