#include "gtlab/geometry.hpp"

#include <numbers>

namespace gtlab::geom {

namespace {
constexpr double two_pi = 2.0 * std::numbers::pi;
}

double TrigPoly::value(double x, double y) const {
    double s = 0.0;
    for (const auto& t : terms_) {
        double phase = two_pi * (t.k1 * x + t.k2 * y);
        s += t.coeff * (t.is_sin ? std::sin(phase) : std::cos(phase));
    }
    return s;
}

double TrigPoly::dx(double x, double y) const {
    double s = 0.0;
    for (const auto& t : terms_) {
        double w = two_pi * t.k1;
        double phase = two_pi * (t.k1 * x + t.k2 * y);
        s += t.coeff * w * (t.is_sin ? std::cos(phase) : -std::sin(phase));
    }
    return s;
}

double TrigPoly::dy(double x, double y) const {
    double s = 0.0;
    for (const auto& t : terms_) {
        double w = two_pi * t.k2;
        double phase = two_pi * (t.k1 * x + t.k2 * y);
        s += t.coeff * w * (t.is_sin ? std::cos(phase) : -std::sin(phase));
    }
    return s;
}

double TrigPoly::dxx(double x, double y) const {
    double s = 0.0;
    for (const auto& t : terms_) {
        double w = two_pi * t.k1;
        double phase = two_pi * (t.k1 * x + t.k2 * y);
        s += -t.coeff * w * w * (t.is_sin ? std::sin(phase) : std::cos(phase));
    }
    return s;
}

double TrigPoly::dxy(double x, double y) const {
    double s = 0.0;
    for (const auto& t : terms_) {
        double wx = two_pi * t.k1, wy = two_pi * t.k2;
        double phase = two_pi * (t.k1 * x + t.k2 * y);
        s += -t.coeff * wx * wy * (t.is_sin ? std::sin(phase) : std::cos(phase));
    }
    return s;
}

double TrigPoly::dyy(double x, double y) const {
    double s = 0.0;
    for (const auto& t : terms_) {
        double w = two_pi * t.k2;
        double phase = two_pi * (t.k1 * x + t.k2 * y);
        s += -t.coeff * w * w * (t.is_sin ? std::sin(phase) : std::cos(phase));
    }
    return s;
}

Christoffels christoffel_eval(const ConformalMetric& m, const ChartPoint& p) {
    Christoffels c;
    double fx = m.fx(p);
    double fy = m.fy(p);
    c.g[0][0][0] = fx;
    c.g[0][0][1] = fy;
    c.g[0][1][0] = fy;
    c.g[0][1][1] = -fx;
    c.g[1][0][0] = -fy;
    c.g[1][0][1] = fx;
    c.g[1][1][0] = fx;
    c.g[1][1][1] = fy;
    return c;
}

double gauss_curvature(const ConformalMetric& m, const ChartPoint& p) {
    const TrigPoly& f = m.f();
    double lap = f.dxx(p.x, p.y) + f.dyy(p.x, p.y);
    return -std::exp(-2.0 * f.value(p.x, p.y)) * lap;
}

FieldEval field_eval(const ClosedFormField& field, const ConformalMetric& m,
                     const ChartPoint& p, const Vec2& v) {
    FieldEval out;
    out.gamma = field.gamma_cov(p);
    out.e2f = m.conformal_factor(p);
    out.E = out.gamma / out.e2f;
    out.gamma_of_v = out.gamma.dot(v);
    return out;
}

double closedness_residual(const Eigen::MatrixXd& gamma1,
                           const Eigen::MatrixXd& gamma2, double h) {
    if (h <= 0.0) throw std::invalid_argument("closedness_residual: h must be positive");
    const Eigen::Index n = gamma1.rows();
    // interior points only, so non-periodic sample sets stay meaningful
    double worst = 0.0;
    for (Eigen::Index i = 1; i + 1 < n; ++i) {
        for (Eigen::Index j = 1; j + 1 < n; ++j) {
            double d2_dx = (gamma2(i + 1, j) - gamma2(i - 1, j)) / (2.0 * h);
            double d1_dy = (gamma1(i, j + 1) - gamma1(i, j - 1)) / (2.0 * h);
            worst = std::max(worst, std::abs(d2_dx - d1_dy));
        }
    }
    return worst;
}

double closedness_residual(const ClosedFormField& field, int n) {
    double h = 1.0 / n;
    Eigen::MatrixXd g1(n, n), g2(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            Vec2 g = field.gamma_cov({i * h, j * h});
            g1(i, j) = g.x();
            g2(i, j) = g.y();
        }
    return closedness_residual(g1, g2, h);
}

Vec2 riemann_covariant_derivative(const ConformalMetric& m, const Vec2& X,
                                  const Vec2& Y, const Mat2& dY, const ChartPoint& p) {
    Christoffels c = christoffel_eval(m, p);
    Vec2 out = dY * X;
    for (int k = 0; k < 2; ++k)
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j) out[k] += c.g[k][i][j] * X[i] * Y[j];
    return out;
}

Vec2 weyl_covariant_derivative(const ConformalMetric& m, const ClosedFormField& field,
                               const Vec2& X, const Vec2& Y, const Mat2& dY,
                               const ChartPoint& p) {
    Vec2 nabla = riemann_covariant_derivative(m, X, Y, dY, p);
    FieldEval fe = field_eval(field, m, p);
    double gXY = m.inner(p, X, Y);
    double gamY = fe.gamma.dot(Y);
    double gamX = fe.gamma.dot(X);
    return nabla - gXY * fe.E + gamY * X + gamX * Y;
}

}  // namespace gtlab::geom
