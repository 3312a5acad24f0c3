#pragma once

/** \file cocycle.hpp
 *  Transverse derivative cocycle over thermostat orbits: Jacobi generator in
 *  the projected Fermi frame, RK4 cocycle integration with the conformal
 *  identity, a finite-difference oracle, and the tangent-map integrator for
 *  parameter-bump perturbations.
 */

#include <Eigen/Dense>
#include <vector>

#include "gtlab/cs_linalg.hpp"
#include "gtlab/flow.hpp"

namespace gtlab::cocycle {

using flow::OrbitSegment;
using flow::Scenario;
using flow::UnitTangentState;
using geom::Vec2;
using Mat2 = Eigen::Matrix2d;
using MatX = Eigen::MatrixXd;

struct MissingFrame : std::runtime_error {
    explicit MissingFrame(const std::string& w) : std::runtime_error(w) {}
};
struct StepTooLarge : std::runtime_error {
    explicit StepTooLarge(const std::string& w) : std::runtime_error(w) {}
};
struct NotTangent : std::runtime_error {
    explicit NotTangent(const std::string& w) : std::runtime_error(w) {}
};

/// Generator of the transverse linear flow, assembled [[0,1],[Q, sigma]].
/// Q = -K + <nabla_{e1} E, e1> - <E,e1>^2; the last term is the price of
/// quotienting by the flow direction (the time-translation variation has
/// vertical component <E,e1>, so the quotient coordinate subtracts it).
struct JacobiGenerator {
    double Q = 0.0;
    double sigma = 0.0;

    Mat2 assembled() const {
        Mat2 A;
        A << 0.0, 1.0, Q, sigma;
        return A;
    }
};

/// Generator from an orbit sample; requires frames (MissingFrame otherwise).
JacobiGenerator jacobi_generator(const Scenario& sc, const OrbitSegment& orbit,
                                 size_t index);

/// Generator straight from a state; the frame is the 90-degree g-rotation
/// of v, which equals the projected parallel transport on a surface.
JacobiGenerator generator_at_state(const Scenario& sc, const UnitTangentState& s);

struct TransverseCocycle {
    std::vector<double> times;
    std::vector<Mat2> T;     ///< T(0) = I
    std::vector<double> s;   ///< accumulated integral of sigma (Simpson)

    size_t size() const { return times.size(); }
};

/// RK4 on Tdot = A(t) T aligned with the orbit samples; generator midpoints
/// come from a half RK4 step of the flow. Aborts if the conformal identity
/// residual exceeds 1e-3.
TransverseCocycle integrate_cocycle(const Scenario& sc, const OrbitSegment& orbit);

/// Central finite differences of the time-T flow in transverse directions
/// (base shift along e1 with parallel-corrected v, and fiber rotation),
/// read off in the endpoint frame as quotient coordinates. Ground truth for
/// integrate_cocycle. Probe must lie in [1e-5, 1e-3].
Mat2 fd_oracle(const Scenario& sc, const UnitTangentState& s0, double T, double h,
               double probe);

/// Polynomial bump N (1-w^2)^5 on |w| <= 1, w = (u-center)/radius, with unit
/// integral and closed-form derivatives through third order; C^4 at the
/// support boundary.
class PolyBump {
public:
    PolyBump(double center, double radius);
    double center() const { return center_; }
    double radius() const { return radius_; }
    double value(double u) const;
    double d1(double u) const;
    double d2(double u) const;
    double d3(double u) const;

private:
    double center_;
    double radius_;
    double norm_;
};

/// Degree-9 smoothstep: 0 -> 1 on [0,1] with four vanishing derivatives at
/// both ends.
double smoothstep4(double x);

/// 1 on [-eps/4, eps/4], 0 outside [-eps/2, eps/2], smoothstep edges.
double plateau(double u, double eps);

/// Product plateau on R^n.
double plateau_nd(const Eigen::VectorXd& x, double eps);

/// Time-bump data for the tangent-map integrator.
struct BumpProfile {
    double eps = 0.5;                                   ///< plateau half-width scale
    std::vector<std::pair<double, double>> dip_windows; ///< h-bar vanishes here
    double delta_center = 0.5;
    double delta_radius = 0.2;

    /// h-bar(t): 1 minus plateau dips over the windows.
    double hbar(double t) const;
    /// Quadrature of 1 - h-bar over [0,1] (Simpson, fixed resolution).
    double hbar_deficit() const;
    PolyBump delta() const { return PolyBump(delta_center, delta_radius); }
};

/// zeta = (a, b, c; d; lambda): symmetric blocks, d with null diagonal.
struct FranksPerturbation {
    MatX a, b, c, d;
    double lambda = 0.0;

    static FranksPerturbation zero(int n);
    double norm() const;
    void require_valid() const;  ///< throws std::invalid_argument on bad shape
};

/// Sampled generator path on [0,1]: A at nodes and midpoints, with the
/// infinitesimal conformal rate sigma at the same places.
struct GeneratorPath {
    std::vector<double> times;
    std::vector<MatX> A;
    std::vector<MatX> A_mid;
    std::vector<double> sigma;
    std::vector<double> sigma_mid;

    int half_dim() const { return static_cast<int>(A.front().rows()) / 2; }
};

/// Builds the path from a thermostat orbit sampled on [0,1].
GeneratorPath generator_path(const Scenario& sc, const OrbitSegment& orbit);

struct FranksResult {
    MatX Z1;    ///< derivative of the perturbed cocycle at parameter 0
    MatX T1;    ///< unperturbed cocycle at time 1
    MatX Y1;    ///< T1^{-1} Z1
    cs::InfinitesimalCS Y_check;
    double s1 = 0.0;  ///< integral of sigma, so v(Y1) should equal lambda*s1
};

/// Integrates Zdot = A Z + B T, Z(0)=0, alongside Tdot = A T, with
/// B = [[0,0],[P(t), lambda*sigma(t) I]], P = hbar (a d + b d' + c d'' + d d''').
/// Verifies Y1 = T1^{-1} Z1 is infinitesimally conformally symplectic.
FranksResult franks_tangent(const GeneratorPath& path, const FranksPerturbation& zeta,
                            const BumpProfile& bumps, double check_tol = 1e-8);

}  // namespace gtlab::cocycle
