#include "gtlab/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

namespace gtlab::analysis {

using cocycle::Mat2;

namespace {

double wrap_unit(double d) { return d - std::round(d); }
double wrap_angle(double d) { return d - 2.0 * M_PI * std::round(d / (2.0 * M_PI)); }

}  // namespace

// ---------------------------------------------------------------------------
// Lyapunov spectrum

LyapunovReport lyapunov_spectrum(const Scenario& sc, const UnitTangentState& s0,
                                 double T, double h, double window) {
    if (!(h > 0.0) || !(T > 0.0)) throw std::invalid_argument("T and h must be positive");
    if (T < 1e3 * h) throw std::invalid_argument("lyapunov_spectrum requires T >= 1000 h");
    if (window < 4.0 * h) throw std::invalid_argument("window must cover several steps");

    Mat2 Q = Mat2::Identity();
    double log_top = 0.0, log_bot = 0.0, s_total = 0.0;

    // One reorthonormalization window; splits itself on overflow.
    std::function<UnitTangentState(const UnitTangentState&, double, int)> run_window =
        [&](const UnitTangentState& from, double span, int depth) -> UnitTangentState {
        OrbitSegment orbit = flow::integrate_orbit(sc, from, span, h);
        flow::fermi_frame(sc, orbit);
        cocycle::TransverseCocycle coc = cocycle::integrate_cocycle(sc, orbit);
        const Mat2& Twin = coc.T.back();
        if (!Twin.allFinite() || Twin.cwiseAbs().maxCoeff() > 1e120) {
            if (depth >= 24 || span <= 16.0 * h)
                throw Blowup("transverse cocycle overflowed inside one window");
            UnitTangentState mid = run_window(from, 0.5 * span, depth + 1);
            return run_window(mid, span - 0.5 * span, depth + 1);
        }
        Mat2 Z = Twin * Q;
        Eigen::HouseholderQR<Mat2> qr(Z);
        Mat2 Qn = qr.householderQ();
        Mat2 R = Qn.transpose() * Z;
        for (int i = 0; i < 2; ++i) {
            if (R(i, i) < 0.0) {
                Qn.col(i) *= -1.0;
                R.row(i) *= -1.0;
            }
        }
        // QR loses the weak direction once the window matrix's condition
        // number eats into the mantissa; split such windows instead of
        // absorbing O(eps * cond) noise into the bottom exponent
        const double cond_cap = 1e8;
        bool degenerate = !(R(0, 0) > 0.0) || !(R(1, 1) > 0.0);
        bool strained = degenerate || R(0, 0) > cond_cap * R(1, 1) ||
                        R(1, 1) > cond_cap * R(0, 0);
        if (strained && depth < 24 && span > 16.0 * h) {
            UnitTangentState mid = run_window(from, 0.5 * span, depth + 1);
            return run_window(mid, span - 0.5 * span, depth + 1);
        }
        if (degenerate) throw Blowup("rank-deficient window cocycle");
        log_top += std::log(R(0, 0));
        log_bot += std::log(R(1, 1));
        Q = Qn;
        s_total += coc.s.back();
        return orbit.back();
    };

    UnitTangentState state = s0;
    double done = 0.0;
    while (done < T - 1e-12 * T) {
        double span = std::min(window, T - done);
        state = run_window(state, span, 0);
        done += span;
    }

    LyapunovReport rep;
    rep.T = T;
    rep.b = s_total / T;
    rep.exponents = {log_top / T, log_bot / T};
    std::sort(rep.exponents.begin(), rep.exponents.end());
    rep.pairing_residual = std::abs(rep.exponents[0] + rep.exponents[1] - rep.b);
    return rep;
}

// ---------------------------------------------------------------------------
// Periodic orbits

namespace {

struct CrossingResult {
    UnitTangentState end;
    double period = 0.0;
    double other = 0.0;       // unwrapped transverse coordinate at the crossing
    double phi = 0.0;         // velocity angle at the crossing
    double coord_speed = 0.0;
};

double section_coord(const SectionSpec& sec, const UnitTangentState& s) {
    return (sec.axis == 0 ? s.p.x : s.p.y) - sec.value;
}

UnitTangentState section_state(const Scenario& sc, const SectionSpec& sec, const Vec2& u) {
    geom::ChartPoint p;
    if (sec.axis == 0) {
        p.x = sec.value;
        p.y = u(0);
    } else {
        p.x = u(0);
        p.y = sec.value;
    }
    return {p, sc.metric.unit_from_angle(p, u(1))};
}

CrossingResult next_crossing(const Scenario& sc, const UnitTangentState& s0,
                             const SectionSpec& sec, const FindPeriodicOptions& o) {
    UnitTangentState s = s0;
    double c_prev = section_coord(sec, s);
    long max_steps = std::lround(o.max_period / o.h);
    for (long k = 0; k < max_steps; ++k) {
        UnitTangentState sn = flow::rk4_step(sc, s, o.h);
        double c_next = section_coord(sec, sn);
        double m = std::floor(c_prev) + 1.0;  // smallest integer strictly above c_prev
        if (c_next >= m) {
            double lo = 0.0, hi = o.h;
            for (int it = 0; it < 64; ++it) {
                double mid = 0.5 * (lo + hi);
                if (section_coord(sec, flow::rk4_step(sc, s, mid)) >= m)
                    hi = mid;
                else
                    lo = mid;
            }
            double tau = 0.5 * (lo + hi);
            CrossingResult r;
            r.end = flow::rk4_step(sc, s, tau);
            r.period = static_cast<double>(k) * o.h + tau;
            r.other = (sec.axis == 0 ? r.end.p.y : r.end.p.x);
            r.phi = std::atan2(r.end.v.y(), r.end.v.x());
            r.coord_speed = (sec.axis == 0 ? r.end.v.x() : r.end.v.y());
            if (std::abs(r.coord_speed) < o.min_transversal)
                throw TangentCrossing("section crossing is nearly tangent");
            return r;
        }
        s = sn;
        c_prev = c_next;
    }
    throw NoConvergence("no section return within max_period");
}

struct ReturnEval {
    Vec2 F = Vec2::Zero();  // wrapped displacement of (transverse coord, angle)
    double period = 0.0;
};

ReturnEval composed_return(const Scenario& sc, const SectionSpec& sec, const Vec2& u,
                           const FindPeriodicOptions& o) {
    UnitTangentState s = section_state(sc, sec, u);
    ReturnEval ev;
    CrossingResult r;
    for (int i = 0; i < o.returns; ++i) {
        r = next_crossing(sc, s, sec, o);
        ev.period += r.period;
        s = r.end;
    }
    ev.F = Vec2(wrap_unit(r.other - u(0)), wrap_angle(r.phi - u(1)));
    return ev;
}

}  // namespace

PeriodicOrbit find_periodic(const Scenario& sc, const UnitTangentState& seed,
                            const SectionSpec& section, FindPeriodicOptions opts) {
    if (section.axis != 0 && section.axis != 1)
        throw std::invalid_argument("section axis must be 0 (x) or 1 (y)");
    if (opts.returns < 1) throw std::invalid_argument("returns must be >= 1");
    if (!(opts.h > 0.0)) throw std::invalid_argument("h must be positive");

    geom::ChartPoint pc = seed.p.canonical();
    Vec2 u = (section.axis == 0) ? Vec2(pc.y, std::atan2(seed.v.y(), seed.v.x()))
                                 : Vec2(pc.x, std::atan2(seed.v.y(), seed.v.x()));

    double res = std::numeric_limits<double>::infinity();
    ReturnEval ev;
    std::vector<double> history;
    const double probe = 1e-6;
    for (int it = 0; it < opts.max_iters; ++it) {
        ev = composed_return(sc, section, u, opts);
        res = ev.F.norm();
        history.push_back(res);
        if (res <= opts.tol) break;
        Mat2 J;
        for (int j = 0; j < 2; ++j) {
            Vec2 up = u, um = u;
            up(j) += probe;
            um(j) -= probe;
            Vec2 Fp = composed_return(sc, section, up, opts).F;
            Vec2 Fm = composed_return(sc, section, um, opts).F;
            J.col(j) = (Fp - Fm) / (2.0 * probe);
        }
        // Minimal-norm Newton step; continua of fixed points leave J singular.
        Eigen::JacobiSVD<Mat2> svd(J, Eigen::ComputeFullU | Eigen::ComputeFullV);
        svd.setThreshold(1e-8);
        Vec2 step = svd.solve(ev.F);
        if (!step.allFinite()) throw NoConvergence("return-map Jacobian is unusable");
        if (step.norm() > 0.45)
            throw NoConvergence("Newton step left the section neighborhood");
        u -= step;
    }
    if (res > opts.tol) {
        char buf[96];
        std::snprintf(buf, sizeof buf, "residual %.3e after %d iterations", res,
                      opts.max_iters);
        throw NoConvergence(buf);
    }

    UnitTangentState sstar = section_state(sc, section, u);
    OrbitSegment orbit = flow::integrate_orbit(sc, sstar, ev.period, opts.h);
    flow::fermi_frame(sc, orbit);
    cocycle::TransverseCocycle coc = cocycle::integrate_cocycle(sc, orbit);

    PeriodicOrbit po;
    po.seed = sstar;
    po.period = ev.period;
    po.return_derivative = cs::validate_cs(coc.T.back(), 1e-6);
    po.s_period = coc.s.back();
    po.residual = res;
    po.newton_residuals = std::move(history);

    double dxw = orbit.back().p.x - sstar.p.x;
    double dyw = orbit.back().p.y - sstar.p.y;
    po.winding_p = static_cast<int>(std::lround(dxw));
    po.winding_q = static_cast<int>(std::lround(dyw));
    if (std::abs(dxw - po.winding_p) > 1e-6 || std::abs(dyw - po.winding_q) > 1e-6)
        throw NotClosed("period endpoint misses the starting fiber");

    po.beta = beta_of_orbit(sc, orbit, 1e-6);
    po.orbit = std::move(orbit);
    po.coc = std::move(coc);
    return po;
}

const char* orbit_class_name(OrbitClass c) {
    switch (c) {
        case OrbitClass::saddle: return "saddle";
        case OrbitClass::sink: return "sink";
        case OrbitClass::source: return "source";
        default: return "non_hyperbolic";
    }
}

Classification classify_periodic(const cs::CSMatrix& return_derivative, double tol) {
    const auto& M = return_derivative.entries;
    if (M.rows() != 2) throw std::invalid_argument("classify_periodic expects a 2x2 return");
    double tr = M(0, 0) + M(1, 1);
    double det = M(0, 0) * M(1, 1) - M(0, 1) * M(1, 0);
    std::complex<double> disc = std::sqrt(std::complex<double>(tr * tr - 4.0 * det, 0.0));
    Classification cl;
    cl.eigenvalues = {0.5 * (tr + disc), 0.5 * (tr - disc)};
    cl.log_product = std::log(return_derivative.mu);
    double m0 = std::abs(cl.eigenvalues[0]);
    double m1 = std::abs(cl.eigenvalues[1]);
    auto banded = [&](double m) { return m >= 1.0 - tol && m <= 1.0 + tol; };
    if (banded(m0) || banded(m1))
        cl.cls = OrbitClass::non_hyperbolic;
    else if (m0 < 1.0 && m1 < 1.0)
        cl.cls = OrbitClass::sink;
    else if (m0 > 1.0 && m1 > 1.0)
        cl.cls = OrbitClass::source;
    else
        cl.cls = OrbitClass::saddle;
    return cl;
}

double beta_of_orbit(const Scenario& sc, const OrbitSegment& orbit, double closed_tol) {
    if (orbit.size() < 2) throw std::invalid_argument("orbit too short");
    const auto& a = orbit.states.front();
    const auto& b = orbit.states.back();
    double gap = std::max({std::abs(wrap_unit(b.p.x - a.p.x)),
                           std::abs(wrap_unit(b.p.y - a.p.y)), (b.v - a.v).norm()});
    if (gap > closed_tol) {
        char buf[64];
        std::snprintf(buf, sizeof buf, "endpoint gap %.3e exceeds %.1e", gap, closed_tol);
        throw NotClosed(buf);
    }

    // gamma(v) is evaluated from the field that was passed in, not from the
    // cached sigma samples: the loop integral of a different closed form over
    // the same curve is a legitimate query (surgery checks use it).
    std::vector<double> g(orbit.size());
    for (size_t k = 0; k < orbit.size(); ++k) {
        const auto& s = orbit.states[k];
        g[k] = geom::field_eval(sc.field, sc.metric, s.p.canonical(), s.v).gamma_of_v;
    }

    size_t K = orbit.size() - 1;
    double integral = 0.0;
    if (K == 1) {
        integral = 0.5 * orbit.step * (g[0] + g[1]);
    } else {
        size_t even_part = (K % 2 == 0) ? K : K - 3;
        double acc = 0.0;
        for (size_t k = 0; k + 2 <= even_part; k += 2)
            acc += g[k] + 4.0 * g[k + 1] + g[k + 2];
        integral = acc * orbit.step / 3.0;
        if (K % 2 != 0)
            integral += 3.0 * orbit.step / 8.0 *
                        (g[K - 3] + 3.0 * g[K - 2] + 3.0 * g[K - 1] + g[K]);
    }
    return integral;
}

geom::ClosedFormField beta_surgery(const geom::ClosedFormField& field, int p, int q,
                                   double alpha) {
    if (p == 0 && q == 0)
        throw NullHomologous("surgery class (0,0) cannot shift any loop integral");
    double n2 = static_cast<double>(p) * p + static_cast<double>(q) * q;
    return geom::ClosedFormField(field.c1() + alpha * p / n2, field.c2() + alpha * q / n2,
                                 field.U());
}

// ---------------------------------------------------------------------------
// Cone fields

ConeReport cone_invariance_test(const Scenario& sc, const OrbitSegment& orbit, double k,
                                int grid_stride) {
    if (!(k > 0.0) || !(k < 0.5))
        throw std::invalid_argument("cone parameter must lie in (0, 1/2)");
    if (grid_stride < 1) throw std::invalid_argument("grid_stride must be >= 1");
    if (orbit.frames.size() != orbit.size())
        throw cocycle::MissingFrame("cone test needs frames; call fermi_frame first");

    double psi1 = 0.5 * std::asin(2.0 * k);
    double psi2 = 0.5 * M_PI - psi1;
    ConeReport rep;
    rep.k = k;
    rep.min_margin = std::numeric_limits<double>::infinity();
    rep.q_psd = true;
    rep.gamma_positive = true;

    auto visit = [&](size_t i) {
        cocycle::JacobiGenerator gen = cocycle::jacobi_generator(sc, orbit, i);
        double margin = std::numeric_limits<double>::infinity();
        for (double psi : {psi1, psi2}) {
            double xh = std::cos(psi), xv = std::sin(psi);
            margin = std::min(margin, xv * xv + gen.Q * xh * xh + gen.sigma * k);
        }
        rep.margins.push_back(margin);
        rep.times.push_back(orbit.times[i]);
        rep.min_margin = std::min(rep.min_margin, margin);
        if (gen.Q < 0.0) rep.q_psd = false;
        if (gen.sigma >= 0.0) rep.gamma_positive = false;
    };

    size_t last = orbit.size() - 1;
    for (size_t i = 0; i < orbit.size(); i += static_cast<size_t>(grid_stride)) visit(i);
    if (last % static_cast<size_t>(grid_stride) != 0) visit(last);

    rep.invariant = rep.min_margin > 0.0;
    return rep;
}

// ---------------------------------------------------------------------------
// Dominated splitting

namespace {

OrbitSegment slice_of(const OrbitSegment& big, size_t i0, size_t i1) {
    OrbitSegment s;
    s.step = big.step;
    s.times.assign(big.times.begin() + i0, big.times.begin() + i1 + 1);
    s.states.assign(big.states.begin() + i0, big.states.begin() + i1 + 1);
    s.frames.assign(big.frames.begin() + i0, big.frames.begin() + i1 + 1);
    s.sigma.assign(big.sigma.begin() + i0, big.sigma.begin() + i1 + 1);
    s.energy.assign(big.energy.begin() + i0, big.energy.begin() + i1 + 1);
    return s;
}

Eigen::JacobiSVD<Mat2> checked_svd(const Mat2& M, double gap_tol) {
    Eigen::JacobiSVD<Mat2> svd(M, Eigen::ComputeFullU | Eigen::ComputeFullV);
    double s0 = svd.singularValues()(0);
    double s1 = svd.singularValues()(1);
    if (!(s0 > 0.0) || (s0 - s1) / s0 < 10.0 * gap_tol)
        throw DegenerateBundle("window cocycle has no usable singular gap");
    return svd;
}

}  // namespace

DominationEstimate domination_estimator(const Scenario& sc,
                                        const std::vector<UnitTangentState>& family,
                                        int l_max, DominationOptions opts) {
    if (family.empty()) throw std::invalid_argument("empty orbit family");
    if (l_max < 1) throw std::invalid_argument("l_max must be >= 1");
    const double W = opts.window;
    const double h = opts.h;
    if (!(W > 0.0) || !(h > 0.0)) throw std::invalid_argument("window and h must be positive");

    DominationEstimate est;
    est.ratio_by_l.assign(static_cast<size_t>(l_max), 0.0);
    const double span = 2.0 * W + l_max;

    for (const auto& x : family) {
        OrbitSegment back = flow::integrate_orbit(sc, x, -W, h);
        OrbitSegment big = flow::integrate_orbit(sc, back.back(), span, h);
        flow::fermi_frame(sc, big);
        auto idx = [&](double t) { return static_cast<size_t>(std::lround(t / big.step)); };
        auto window_coc = [&](double t0, double t1) {
            return cocycle::integrate_cocycle(sc, slice_of(big, idx(t0), idx(t1))).T.back();
        };

        // Stable direction at the sample: most contracted input of the
        // future window. Center-unstable: image top of the past window.
        Eigen::JacobiSVD<Mat2> fut = checked_svd(window_coc(W, 2.0 * W), opts.gap_tol);
        Vec2 n_cs = fut.matrixV().col(1);
        est.cs_directions.push_back(n_cs);
        Eigen::JacobiSVD<Mat2> past0 = checked_svd(window_coc(0.0, W), opts.gap_tol);
        est.cu_directions.push_back(past0.matrixU().col(0));

        cocycle::TransverseCocycle coc_f =
            cocycle::integrate_cocycle(sc, slice_of(big, idx(W), idx(W + l_max)));
        for (int l = 1; l <= l_max; ++l) {
            const Mat2& Tl = coc_f.T[static_cast<size_t>(std::lround(l / h))];
            Eigen::JacobiSVD<Mat2> past =
                checked_svd(window_coc(static_cast<double>(l), W + l), opts.gap_tol);
            Vec2 n_cu = past.matrixU().col(0);
            double ratio = (Tl * n_cs).norm() * (Tl.inverse() * n_cu).norm();
            est.ratio_by_l[static_cast<size_t>(l - 1)] =
                std::max(est.ratio_by_l[static_cast<size_t>(l - 1)], ratio);
        }
    }

    for (int l = 1; l <= l_max; ++l) {
        if (est.ratio_by_l[static_cast<size_t>(l - 1)] < 0.5) {
            est.l = l;
            est.worst_ratio = est.ratio_by_l[static_cast<size_t>(l - 1)];
            break;
        }
    }
    if (!est.l) est.worst_ratio = est.ratio_by_l.back();
    return est;
}

}  // namespace gtlab::analysis
