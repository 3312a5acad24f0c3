#include "gtlab/cocycle.hpp"

#include <cmath>

namespace gtlab::cocycle {

namespace {

JacobiGenerator generator_with_frame(const Scenario& sc, const UnitTangentState& s,
                                     Vec2 e1) {
    using geom::ChartPoint;
    ChartPoint p = s.p.canonical();
    const auto& metric = sc.metric;
    const auto& field = sc.field;

    double e2f = metric.conformal_factor(p);
    Vec2 v = s.v / std::sqrt(e2f * s.v.squaredNorm());
    e1 /= std::sqrt(e2f * e1.squaredNorm());

    double K = geom::gauss_curvature(metric, p);
    geom::Christoffels c = geom::christoffel_eval(metric, p);
    Vec2 gamma = field.gamma_cov(p);
    geom::Mat2 dgam = field.gamma_cov_jacobian(p);
    double fi[2] = {metric.fx(p), metric.fy(p)};
    Vec2 E = gamma / e2f;

    // dE(k,i) = d_i E^k with E^k = e^{-2f} gamma_k
    geom::Mat2 dE;
    for (int k = 0; k < 2; ++k)
        for (int i = 0; i < 2; ++i)
            dE(k, i) = (dgam(k, i) - 2.0 * fi[i] * gamma[k]) / e2f;

    Vec2 nablaE = dE * e1;
    for (int k = 0; k < 2; ++k)
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j) nablaE[k] += c.g[k][i][j] * e1[i] * E[j];

    double nabla_term = e2f * nablaE.dot(e1);
    double E1 = gamma.dot(e1);

    JacobiGenerator g;
    g.Q = -K + nabla_term - E1 * E1;
    g.sigma = -gamma.dot(v);
    return g;
}

}  // namespace

JacobiGenerator generator_at_state(const Scenario& sc, const UnitTangentState& s) {
    return generator_with_frame(sc, s, geom::ConformalMetric::rot90(s.v));
}

JacobiGenerator jacobi_generator(const Scenario& sc, const OrbitSegment& orbit,
                                 size_t index) {
    if (index >= orbit.size()) throw std::out_of_range("jacobi_generator: index");
    if (orbit.frames.size() != orbit.size())
        throw MissingFrame("jacobi_generator: orbit has no Fermi frames");
    return generator_with_frame(sc, orbit.states[index], orbit.frames[index]);
}

TransverseCocycle integrate_cocycle(const Scenario& sc, const OrbitSegment& orbit) {
    const size_t n = orbit.size();
    if (orbit.frames.size() != n)
        throw MissingFrame("integrate_cocycle: orbit has no Fermi frames");
    TransverseCocycle out;
    out.times = orbit.times;
    out.T.resize(n);
    out.s.resize(n);
    if (n == 0) return out;

    const Mat2 J = (Mat2() << 0.0, -1.0, 1.0, 0.0).finished();
    Mat2 T = Mat2::Identity();
    double s_acc = 0.0;
    out.T[0] = T;
    out.s[0] = 0.0;
    const double h = orbit.step;

    for (size_t k = 0; k + 1 < n; ++k) {
        Mat2 A0 = jacobi_generator(sc, orbit, k).assembled();
        UnitTangentState mid = flow::rk4_step(sc, orbit.states[k], h / 2.0);
        JacobiGenerator gm = generator_at_state(sc, mid);
        Mat2 Am = gm.assembled();
        Mat2 A1 = jacobi_generator(sc, orbit, k + 1).assembled();

        Mat2 k1 = A0 * T;
        Mat2 k2 = Am * (T + (h / 2.0) * k1);
        Mat2 k3 = Am * (T + (h / 2.0) * k2);
        Mat2 k4 = A1 * (T + h * k3);
        T += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);

        double s0 = orbit.sigma[k];
        double s1 = orbit.sigma[k + 1];
        s_acc += (h / 6.0) * (s0 + 4.0 * gm.sigma + s1);

        out.T[k + 1] = T;
        out.s[k + 1] = s_acc;

        // scale by the size of the form itself: e^s alone underflows on
        // strongly contracting stretches while T entries stay order one
        double es = std::exp(s_acc);
        double scale = std::max(es, T.squaredNorm());
        double res = (T.transpose() * J * T - es * J).cwiseAbs().maxCoeff() / scale;
        if (res > 1e-3)
            throw StepTooLarge("integrate_cocycle: conformal identity residual " +
                               std::to_string(res) + " at t = " +
                               std::to_string(orbit.times[k + 1]));
    }
    return out;
}

namespace {

struct QuotientReadoff {
    double jh;
    double xi;
};

QuotientReadoff read_variation(const Scenario& sc, const UnitTangentState& end,
                               const Vec2& Jvec, const Vec2& Jdot) {
    geom::ChartPoint p = end.p.canonical();
    double e2f = sc.metric.conformal_factor(p);
    Vec2 v = end.v / std::sqrt(e2f * end.v.squaredNorm());
    Vec2 e1 = geom::ConformalMetric::rot90(v);

    geom::Christoffels c = geom::christoffel_eval(sc.metric, p);
    Vec2 nablaJ = Jdot;
    for (int k = 0; k < 2; ++k)
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j) nablaJ[k] += c.g[k][i][j] * end.v[i] * Jvec[j];

    double j0 = e2f * Jvec.dot(v);
    double jh = e2f * Jvec.dot(e1);
    double xv = e2f * nablaJ.dot(e1);
    double E1 = sc.field.gamma_cov(p).dot(e1);
    return {jh, xv - E1 * j0};
}

}  // namespace

Mat2 fd_oracle(const Scenario& sc, const UnitTangentState& s0, double T, double h,
               double probe) {
    if (!(probe >= 1e-5 && probe <= 1e-3))
        throw std::invalid_argument("fd_oracle: probe must lie in [1e-5, 1e-3]");

    geom::ChartPoint p0 = s0.p.canonical();
    double e2f0 = sc.metric.conformal_factor(p0);
    Vec2 v0 = s0.v / std::sqrt(e2f0 * s0.v.squaredNorm());
    Vec2 e1 = geom::ConformalMetric::rot90(v0);

    geom::Christoffels c0 = geom::christoffel_eval(sc.metric, p0);
    Vec2 corr = Vec2::Zero();  // Gamma(e1, v): transport correction for v
    for (int k = 0; k < 2; ++k)
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j) corr[k] += c0.g[k][i][j] * e1[i] * v0[j];

    auto endpoint = [&](const UnitTangentState& s) {
        return integrate_orbit(sc, s, T, h).back();
    };

    auto horizontal = [&](double sgn) {
        UnitTangentState s;
        s.p = {s0.p.x + sgn * probe * e1.x(), s0.p.y + sgn * probe * e1.y()};
        s.v = v0 - sgn * probe * corr;
        s.v /= sc.metric.norm(s.p.canonical(), s.v);
        return endpoint(s);
    };
    auto vertical = [&](double sgn) {
        UnitTangentState s;
        s.p = s0.p;
        s.v = std::cos(sgn * probe) * v0 + std::sin(sgn * probe) * e1;
        return endpoint(s);
    };

    UnitTangentState base_end = endpoint({p0, v0});

    auto column = [&](const UnitTangentState& plus, const UnitTangentState& minus) {
        Vec2 Jvec{(plus.p.x - minus.p.x) / (2.0 * probe),
                  (plus.p.y - minus.p.y) / (2.0 * probe)};
        Vec2 Jdot = (plus.v - minus.v) / (2.0 * probe);
        QuotientReadoff q = read_variation(sc, base_end, Jvec, Jdot);
        return Vec2{q.jh, q.xi};
    };

    Vec2 colH = column(horizontal(+1.0), horizontal(-1.0));
    Vec2 colV = column(vertical(+1.0), vertical(-1.0));
    Mat2 out;
    out << colH.x(), colV.x(), colH.y(), colV.y();
    return out;
}

PolyBump::PolyBump(double center, double radius) : center_(center), radius_(radius) {
    if (!(radius > 0.0)) throw std::invalid_argument("PolyBump: radius must be positive");
    norm_ = 693.0 / (512.0 * radius);
}

double PolyBump::value(double u) const {
    double w = (u - center_) / radius_;
    if (std::abs(w) >= 1.0) return 0.0;
    double q = 1.0 - w * w;
    return norm_ * q * q * q * q * q;
}

double PolyBump::d1(double u) const {
    double w = (u - center_) / radius_;
    if (std::abs(w) >= 1.0) return 0.0;
    double q = 1.0 - w * w;
    return norm_ / radius_ * (-10.0 * w * q * q * q * q);
}

double PolyBump::d2(double u) const {
    double w = (u - center_) / radius_;
    if (std::abs(w) >= 1.0) return 0.0;
    double q = 1.0 - w * w;
    return norm_ / (radius_ * radius_) *
           (-10.0 * q * q * q * q + 80.0 * w * w * q * q * q);
}

double PolyBump::d3(double u) const {
    double w = (u - center_) / radius_;
    if (std::abs(w) >= 1.0) return 0.0;
    double q = 1.0 - w * w;
    return norm_ / (radius_ * radius_ * radius_) *
           (240.0 * w * q * q * q - 480.0 * w * w * w * q * q);
}

double smoothstep4(double x) {
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    return ((((70.0 * x - 315.0) * x + 540.0) * x - 420.0) * x + 126.0) * x * x * x * x * x;
}

double plateau(double u, double eps) {
    double a = eps / 4.0, b = eps / 2.0;
    double au = std::abs(u);
    if (au <= a) return 1.0;
    if (au >= b) return 0.0;
    return smoothstep4((b - au) / (b - a));
}

double plateau_nd(const Eigen::VectorXd& x, double eps) {
    double out = 1.0;
    for (Eigen::Index i = 0; i < x.size(); ++i) out *= plateau(x[i], eps);
    return out;
}

double BumpProfile::hbar(double t) const {
    double dip = 0.0;
    for (const auto& [w0, w1] : dip_windows)
        dip += plateau(t - 0.5 * (w0 + w1), w1 - w0);
    return 1.0 - std::min(1.0, dip);
}

double BumpProfile::hbar_deficit() const {
    const int n = 20000;  // Simpson, even count
    double h = 1.0 / n;
    double acc = 0.0;
    auto f = [&](double t) { return 1.0 - hbar(t); };
    for (int i = 0; i < n; i += 2)
        acc += h / 3.0 * (f(i * h) + 4.0 * f((i + 1) * h) + f((i + 2) * h));
    return acc;
}

FranksPerturbation FranksPerturbation::zero(int n) {
    FranksPerturbation z;
    z.a = MatX::Zero(n, n);
    z.b = MatX::Zero(n, n);
    z.c = MatX::Zero(n, n);
    z.d = MatX::Zero(n, n);
    z.lambda = 0.0;
    return z;
}

double FranksPerturbation::norm() const {
    return std::sqrt(a.squaredNorm() + b.squaredNorm() + c.squaredNorm() +
                     d.squaredNorm() + lambda * lambda);
}

void FranksPerturbation::require_valid() const {
    auto sym = [](const MatX& m) {
        return (m - m.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * std::max(1.0, m.cwiseAbs().maxCoeff());
    };
    if (a.rows() != a.cols() || !sym(a) || !sym(b) || !sym(c) || !sym(d))
        throw std::invalid_argument("FranksPerturbation: blocks must be symmetric");
    if (d.diagonal().cwiseAbs().maxCoeff() > 0.0)
        throw std::invalid_argument("FranksPerturbation: d must have null diagonal");
}

GeneratorPath generator_path(const Scenario& sc, const OrbitSegment& orbit) {
    GeneratorPath path;
    const size_t n = orbit.size();
    path.times = orbit.times;
    path.A.reserve(n);
    path.sigma.reserve(n);
    const bool framed = orbit.frames.size() == n;
    for (size_t k = 0; k < n; ++k) {
        JacobiGenerator g = framed ? jacobi_generator(sc, orbit, k)
                                   : generator_at_state(sc, orbit.states[k]);
        path.A.push_back(g.assembled());
        path.sigma.push_back(g.sigma);
    }
    for (size_t k = 0; k + 1 < n; ++k) {
        UnitTangentState mid = flow::rk4_step(sc, orbit.states[k], orbit.step / 2.0);
        JacobiGenerator g = generator_at_state(sc, mid);
        path.A_mid.push_back(g.assembled());
        path.sigma_mid.push_back(g.sigma);
    }
    return path;
}

FranksResult franks_tangent(const GeneratorPath& path, const FranksPerturbation& zeta,
                            const BumpProfile& bumps, double check_tol) {
    zeta.require_valid();
    const int n = path.half_dim();
    const int dim = 2 * n;
    if (zeta.a.rows() != n)
        throw std::invalid_argument("franks_tangent: zeta size mismatch");
    PolyBump delta = bumps.delta();

    auto B_at = [&](double t, double sigma) {
        MatX P = bumps.hbar(t) * (zeta.a * delta.value(t) + zeta.b * delta.d1(t) +
                                  zeta.c * delta.d2(t) + zeta.d * delta.d3(t));
        MatX B = MatX::Zero(dim, dim);
        B.bottomLeftCorner(n, n) = P;
        B.bottomRightCorner(n, n) = zeta.lambda * sigma * MatX::Identity(n, n);
        return B;
    };

    MatX T = MatX::Identity(dim, dim);
    MatX Z = MatX::Zero(dim, dim);
    double s1 = 0.0;
    const size_t N = path.times.size();
    for (size_t k = 0; k + 1 < N; ++k) {
        double t0 = path.times[k], t1 = path.times[k + 1];
        double h = t1 - t0, tm = t0 + h / 2.0;
        const MatX& A0 = path.A[k];
        const MatX& Am = path.A_mid[k];
        const MatX& A1 = path.A[k + 1];
        MatX B0 = B_at(t0, path.sigma[k]);
        MatX Bm = B_at(tm, path.sigma_mid[k]);
        MatX B1 = B_at(t1, path.sigma[k + 1]);

        MatX k1T = A0 * T;
        MatX k1Z = A0 * Z + B0 * T;
        MatX k2T = Am * (T + h / 2.0 * k1T);
        MatX k2Z = Am * (Z + h / 2.0 * k1Z) + Bm * (T + h / 2.0 * k1T);
        MatX k3T = Am * (T + h / 2.0 * k2T);
        MatX k3Z = Am * (Z + h / 2.0 * k2Z) + Bm * (T + h / 2.0 * k2T);
        MatX k4T = A1 * (T + h * k3T);
        MatX k4Z = A1 * (Z + h * k3Z) + B1 * (T + h * k3T);

        T += h / 6.0 * (k1T + 2.0 * k2T + 2.0 * k3T + k4T);
        Z += h / 6.0 * (k1Z + 2.0 * k2Z + 2.0 * k3Z + k4Z);
        s1 += h / 6.0 * (path.sigma[k] + 4.0 * path.sigma_mid[k] + path.sigma[k + 1]);
    }

    FranksResult out;
    out.Z1 = Z;
    out.T1 = T;
    out.Y1 = T.inverse() * Z;
    out.s1 = s1;
    double scale = std::max(1.0, out.Y1.cwiseAbs().maxCoeff());
    try {
        out.Y_check = cs::infinitesimal_cs_check(out.Y1, check_tol * scale);
    } catch (const cs::NotInfinitesimallyCS& e) {
        throw NotTangent(std::string("franks_tangent: ") + e.what());
    }
    return out;
}

}  // namespace gtlab::cocycle
