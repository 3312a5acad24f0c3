#pragma once

/** \file analysis.hpp
 *  Orbit-level diagnostics: Lyapunov spectra with the pairing check,
 *  periodic-orbit search and classification, loop integrals of the force
 *  form with cohomological surgery, cone-field monotonicity, and dominated
 *  splitting estimation.
 */

#include <array>
#include <complex>
#include <optional>

#include "gtlab/cocycle.hpp"

namespace gtlab::analysis {

using cocycle::TransverseCocycle;
using flow::OrbitSegment;
using flow::Scenario;
using flow::UnitTangentState;
using geom::Vec2;

struct Blowup : std::runtime_error {
    explicit Blowup(const std::string& w) : std::runtime_error(w) {}
};
struct NoConvergence : std::runtime_error {
    explicit NoConvergence(const std::string& w) : std::runtime_error(w) {}
};
struct TangentCrossing : std::runtime_error {
    explicit TangentCrossing(const std::string& w) : std::runtime_error(w) {}
};
struct NotClosed : std::runtime_error {
    explicit NotClosed(const std::string& w) : std::runtime_error(w) {}
};
struct NullHomologous : std::runtime_error {
    explicit NullHomologous(const std::string& w) : std::runtime_error(w) {}
};
struct DegenerateBundle : std::runtime_error {
    explicit DegenerateBundle(const std::string& w) : std::runtime_error(w) {}
};

struct LyapunovReport {
    std::vector<double> exponents;  ///< ascending
    double b = 0.0;                 ///< s(T)/T, mean conformal rate
    double T = 0.0;
    double pairing_residual = 0.0;  ///< |lambda1 + lambda2 - b|
};

/// QR-reorthonormalized transverse frame propagation in windows.
LyapunovReport lyapunov_spectrum(const Scenario& sc, const UnitTangentState& s0,
                                 double T, double h, double window = 20.0);

/// Coordinate-slice Poincare section: {axis coordinate == value mod 1} with
/// positive crossing velocity. axis 0 is x, axis 1 is y.
struct SectionSpec {
    int axis = 1;
    double value = 0.0;
};

struct PeriodicOrbit {
    UnitTangentState seed;  ///< converged on-section state
    double period = 0.0;
    cs::CSMatrix return_derivative;
    double beta = 0.0;      ///< loop integral of gamma(v)
    double s_period = 0.0;  ///< accumulated sigma over one period
    double residual = 0.0;  ///< section-coordinate distance of return(x) to x
    std::vector<double> newton_residuals;  ///< per-iteration history
    int winding_p = 0;
    int winding_q = 0;
    OrbitSegment orbit;  ///< one period, frames filled
    TransverseCocycle coc;
};

struct FindPeriodicOptions {
    int max_iters = 30;
    int returns = 1;             ///< compose the first-return map this many times
    double h = 1e-3;
    double tol = 1e-11;          ///< Newton stop on section-coordinate residual
    double max_period = 50.0;    ///< give up if no section return by then
    double min_transversal = 1e-4;
};

PeriodicOrbit find_periodic(const Scenario& sc, const UnitTangentState& seed,
                            const SectionSpec& section, FindPeriodicOptions opts = {});

enum class OrbitClass { saddle, sink, source, non_hyperbolic };

struct Classification {
    OrbitClass cls = OrbitClass::non_hyperbolic;
    std::array<std::complex<double>, 2> eigenvalues;
    double log_product = 0.0;  ///< log(lambda1*lambda2) = log mu
};

const char* orbit_class_name(OrbitClass c);

/// Bands eigenvalue moduli against [1-tol, 1+tol].
Classification classify_periodic(const cs::CSMatrix& return_derivative,
                                 double tol = 1e-6);

/// Composite-Simpson loop integral of gamma(v) over one period; throws
/// NotClosed if the endpoints do not match on the torus.
double beta_of_orbit(const Scenario& sc, const OrbitSegment& orbit,
                     double closed_tol = 1e-6);

/// Harmonic-part shift (c1,c2) += alpha*(p,q)/(p^2+q^2).
geom::ClosedFormField beta_surgery(const geom::ClosedFormField& field, int p, int q,
                                   double alpha);

struct ConeReport {
    double k = 0.0;
    double min_margin = 0.0;
    bool invariant = false;
    bool q_psd = false;            ///< Q >= 0 at every sample
    bool gamma_positive = false;   ///< gamma(v) > 0 at every sample
    std::vector<double> margins;   ///< per sampled time, min over boundary rays
    std::vector<double> times;
};

/// Monotonicity of L(xi) = xi_h * xi_v on the cone boundary {L = k, |xi| = 1}:
/// dL/dt = xi_v^2 + Q xi_h^2 + sigma k, minimized over the sample grid.
ConeReport cone_invariance_test(const Scenario& sc, const OrbitSegment& orbit,
                                double k, int grid_stride = 1);

struct DominationEstimate {
    std::optional<int> l;
    double worst_ratio = 0.0;              ///< at the returned l (or l_max)
    std::vector<double> ratio_by_l;        ///< worst over samples, index l-1
    std::vector<Vec2> cs_directions;       ///< per sample
    std::vector<Vec2> cu_directions;
};

struct DominationOptions {
    double window = 20.0;
    double h = 1e-2;
    double gap_tol = 1e-9;  ///< DegenerateBundle if relative singular gap < 10*this
};

/// Bundle directions from windowed singular vectors; scans l = 1..l_max for
/// ||T^l|_cs|| * ||T^{-l}|_cu|| < 1/2 at every sample.
DominationEstimate domination_estimator(const Scenario& sc,
                                        const std::vector<UnitTangentState>& family,
                                        int l_max, DominationOptions opts = {});

}  // namespace gtlab::analysis
