#pragma once

/** \file geometry.hpp
 *  Conformal metrics on the unit 2-torus, Christoffel symbols, Gauss
 *  curvature, closed 1-form force fields, and the Weyl connection.
 */

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace gtlab::geom {

using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;

/// One term coeff * cos(2*pi*(k1*x + k2*y)) or coeff * sin(...).
struct TrigTerm {
    double coeff = 0.0;
    bool is_sin = false;
    int k1 = 0;
    int k2 = 0;
};

/// Finite trigonometric polynomial on the unit torus; closed under d/dx, d/dy.
class TrigPoly {
public:
    TrigPoly() = default;
    explicit TrigPoly(std::vector<TrigTerm> terms) : terms_(std::move(terms)) {}

    bool empty() const { return terms_.empty(); }
    const std::vector<TrigTerm>& terms() const { return terms_; }
    void add(const TrigTerm& t) { terms_.push_back(t); }

    double value(double x, double y) const;
    double dx(double x, double y) const;
    double dy(double x, double y) const;
    double dxx(double x, double y) const;
    double dxy(double x, double y) const;
    double dyy(double x, double y) const;

private:
    std::vector<TrigTerm> terms_;
};

/// Point on the unit torus; stored coordinates may be any reals.
struct ChartPoint {
    double x = 0.0;
    double y = 0.0;

    /// Representative with both coordinates in [0,1).
    ChartPoint canonical() const {
        double cx = x - std::floor(x);
        double cy = y - std::floor(y);
        if (cx >= 1.0) cx = 0.0;
        if (cy >= 1.0) cy = 0.0;
        return {cx, cy};
    }
};

/// Christoffel symbols of the Levi-Civita connection, indexed [k][i][j].
struct Christoffels {
    double g[2][2][2] = {};
};

enum class MetricKind { flat, conformal };

/// Metric tensor e^{2 f(x,y)} * identity; flat means f == 0.
class ConformalMetric {
public:
    ConformalMetric() : kind_(MetricKind::flat) {}
    explicit ConformalMetric(TrigPoly f)
        : kind_(f.empty() ? MetricKind::flat : MetricKind::conformal),
          f_(std::move(f)) {}

    MetricKind kind() const { return kind_; }
    const TrigPoly& f() const { return f_; }

    double f_at(const ChartPoint& p) const { return f_.value(p.x, p.y); }
    double fx(const ChartPoint& p) const { return f_.dx(p.x, p.y); }
    double fy(const ChartPoint& p) const { return f_.dy(p.x, p.y); }

    /// e^{2f} at p.
    double conformal_factor(const ChartPoint& p) const {
        return std::exp(2.0 * f_at(p));
    }

    double inner(const ChartPoint& p, const Vec2& u, const Vec2& w) const {
        return conformal_factor(p) * u.dot(w);
    }
    double norm(const ChartPoint& p, const Vec2& u) const {
        return std::sqrt(inner(p, u, u));
    }

    /// g-unit vector pointing along chart angle phi.
    Vec2 unit_from_angle(const ChartPoint& p, double phi) const {
        double s = std::exp(-f_at(p));
        return {s * std::cos(phi), s * std::sin(phi)};
    }

    /// 90-degree g-rotation of u (orientation-preserving, g-norm kept).
    static Vec2 rot90(const Vec2& u) { return {-u.y(), u.x()}; }

private:
    MetricKind kind_;
    TrigPoly f_;
};

Christoffels christoffel_eval(const ConformalMetric& m, const ChartPoint& p);

double gauss_curvature(const ConformalMetric& m, const ChartPoint& p);

/// gamma = c1 dx + c2 dy + dU; the induced force field is E = gamma^sharp.
class ClosedFormField {
public:
    ClosedFormField() = default;
    ClosedFormField(double c1, double c2, TrigPoly U = {})
        : c1_(c1), c2_(c2), U_(std::move(U)) {}

    double c1() const { return c1_; }
    double c2() const { return c2_; }
    const TrigPoly& U() const { return U_; }

    /// Covariant components (gamma_1, gamma_2) at p.
    Vec2 gamma_cov(const ChartPoint& p) const {
        return {c1_ + U_.dx(p.x, p.y), c2_ + U_.dy(p.x, p.y)};
    }
    /// d_j gamma_i as matrix entry (i,j); symmetric since gamma - c is exact.
    Mat2 gamma_cov_jacobian(const ChartPoint& p) const {
        Mat2 J;
        double uxx = U_.dxx(p.x, p.y), uxy = U_.dxy(p.x, p.y), uyy = U_.dyy(p.x, p.y);
        J << uxx, uxy, uxy, uyy;
        return J;
    }

private:
    double c1_ = 0.0;
    double c2_ = 0.0;
    TrigPoly U_;
};

struct FieldEval {
    Vec2 gamma;      ///< covariant components of the 1-form
    Vec2 E;          ///< contravariant force components, E^i = e^{-2f} gamma_i
    double gamma_of_v = 0.0;  ///< gamma(v) = g(E, v) for the supplied v
    double e2f = 1.0;         ///< conformal factor at p
};

FieldEval field_eval(const ClosedFormField& field, const ConformalMetric& m,
                     const ChartPoint& p, const Vec2& v = Vec2::Zero());

/// Max |d(gamma_2)/dx - d(gamma_1)/dy| over interior grid nodes by central
/// differences; inputs are raw samples gamma1(i,j), gamma2(i,j) at spacing h.
double closedness_residual(const Eigen::MatrixXd& gamma1,
                           const Eigen::MatrixXd& gamma2, double h);

/// Convenience: sample a field's raw gamma on an n x n grid and measure.
double closedness_residual(const ClosedFormField& field, int n);

/// Weyl connection: nabla-hat_X Y = nabla_X Y - <X,Y> E + gamma(Y) X + gamma(X) Y.
/// dY holds chart partials dY(k,i) = dY^k/dx^i at p.
Vec2 weyl_covariant_derivative(const ConformalMetric& m, const ClosedFormField& field,
                               const Vec2& X, const Vec2& Y, const Mat2& dY,
                               const ChartPoint& p);

/// Levi-Civita covariant derivative with the same calling convention.
Vec2 riemann_covariant_derivative(const ConformalMetric& m, const Vec2& X,
                                  const Vec2& Y, const Mat2& dY, const ChartPoint& p);

}  // namespace gtlab::geom
