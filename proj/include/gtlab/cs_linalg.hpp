#pragma once

/** \file cs_linalg.hpp
 *  Conformally symplectic matrix algebra: validation against M^T J M = mu J,
 *  eigenvalue pairing, plane rotations, periodic linear systems, word
 *  products, domination tests, and homothety searches.
 */

#include <Eigen/Dense>
#include <complex>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace gtlab::cs {

using Mat = Eigen::MatrixXd;

struct NotConformal : std::runtime_error {
    explicit NotConformal(const std::string& w) : std::runtime_error(w) {}
};
struct Singular : std::runtime_error {
    explicit Singular(const std::string& w) : std::runtime_error(w) {}
};
struct OddDimension : std::runtime_error {
    explicit OddDimension(const std::string& w) : std::runtime_error(w) {}
};
struct PairingFailure : std::runtime_error {
    explicit PairingFailure(const std::string& w) : std::runtime_error(w) {}
};
struct IndexOutOfRange : std::runtime_error {
    explicit IndexOutOfRange(const std::string& w) : std::runtime_error(w) {}
};
struct DimensionMismatch : std::runtime_error {
    explicit DimensionMismatch(const std::string& w) : std::runtime_error(w) {}
};
struct NotInvariantSplit : std::runtime_error {
    explicit NotInvariantSplit(const std::string& w) : std::runtime_error(w) {}
};
struct MissingTransition : std::runtime_error {
    explicit MissingTransition(const std::string& w) : std::runtime_error(w) {}
};
struct NotInfinitesimallyCS : std::runtime_error {
    explicit NotInfinitesimallyCS(const std::string& w) : std::runtime_error(w) {}
};

/// Canonical block matrix [[0,-I],[I,0]] of size 2n x 2n.
Mat canonical_j(int n);

/// Matrix with M^T J M = mu J; mu > 0, invertible.
struct CSMatrix {
    Mat entries;
    double mu = 1.0;
    double tol = 0.0;
    double residual = 0.0;  ///< achieved max-abs residual of M^T J M - mu J

    int half_dim() const { return static_cast<int>(entries.rows()) / 2; }
    int dim() const { return static_cast<int>(entries.rows()); }
};

/// Fits mu by least squares over M^T J M = mu J and checks the residual.
CSMatrix validate_cs(const Mat& M, double tol);

struct EigenPair {
    std::complex<double> lambda;
    std::complex<double> partner;
};

struct PairingReport {
    std::vector<EigenPair> pairs;  ///< n pairs, each eigenvalue used once
    bool hyperbolic = false;       ///< no modulus inside [1-band, 1+band]
    double worst_residual = 0.0;   ///< max |lambda*partner - mu|
};

/// Greedy pairing by |lambda*partner - mu|, largest modulus first.
PairingReport eigen_pairing(const CSMatrix& M, double pairing_tol = 1e-8,
                            double band = 1e-9);

/// Index conjugation k -> k+n on 1..2n (1-based).
int conjugate_index(int k, int n);

/// Plane rotation by theta acting on coordinates i < j of R^{2n} (1-based):
/// identity except (i,i)=(j,j)=cos, (i,j)=-sin, (j,i)=sin.
Mat rotation(double theta, int i, int j, int n);

/// rotation with the index pair normalized to (min, max); pairing a plane
/// with its conjugate-index plane at equal angle is then symplectic.
Mat rotation_unordered(double theta, int a, int b, int n);

/// Letters ordered first-applied-first; returns word.back()*...*word.front().
/// Empty word yields the identity of size dim_if_empty with mu = 1.
CSMatrix word_product(const std::vector<CSMatrix>& word, int dim_if_empty = 2);

/// Invariant splitting given by explicit basis columns.
struct SplitSpec {
    Mat F;
    Mat G;
};

/// Cyclic system of fiber maps; letters[i] maps fiber i to fiber i+1 mod P.
/// Word-level searches treat each point as periodic with letters[i] its
/// return matrix and transitions (i,j) mapping fiber j to fiber i.
struct PeriodicLinearSystem {
    std::vector<CSMatrix> letters;
    std::map<std::pair<int, int>, std::vector<CSMatrix>> transitions;
};

struct DominationResult {
    bool dominated = false;
    double worst_ratio = 0.0;
};

/// Checks ||A^l(x)|_F|| * ||A^{-l}(f^l x)|_G|| < 1/2 at every cyclic position.
DominationResult l_domination_test(const PeriodicLinearSystem& sys,
                                   const SplitSpec& split, int l,
                                   double angle_tol = 1e-8);

/// Smallest |s| on the grid in [-1,1] such that R^{s*alpha} M has a complex
/// eigenvalue (discriminant < 0); none if the scan is exhausted.
std::optional<double> mane_complexify(const CSMatrix& M, double alpha,
                                      double grid_step);

/// B_t = R^{t*alpha} on the (j, k+1) plane composed with the same-angle
/// rotation on the conjugate-index plane, applied to B; preserves mu.
CSMatrix mixing_isotopy(const CSMatrix& B, int j, int k, double alpha, double t);

struct HomothetyWord {
    std::string description;  ///< e.g. "t(0,1) L1^2 t(1,0) L0^1"
    CSMatrix product;
    double scalar = 0.0;        ///< fitted s in ||P - s I||
    double rel_residual = 0.0;  ///< ||P - s I|| / ||P|| (Frobenius)
};

/// Bounded breadth-first search over transition-interleaved letter powers.
/// Powers run 1..max_power, block count 1..max_blocks. When every letter has
/// mu = 1 any hit necessarily has |s| ~ 1: products then keep mu = 1, so no
/// contraction or dilation can be produced, only (anti)rotational hits.
std::optional<HomothetyWord> homothety_search(const PeriodicLinearSystem& sys,
                                              double epsilon, int max_power,
                                              int max_blocks = 3);

/// Y with Y^T J + J Y = v J; block form [[beta, gamma],[alpha, vI-beta^T]].
struct InfinitesimalCS {
    Mat entries;
    double v = 0.0;
    double residual = 0.0;
    Mat alpha;
    Mat beta;
    Mat gamma;
    double alpha_sym_residual = 0.0;
    double gamma_sym_residual = 0.0;
};

InfinitesimalCS infinitesimal_cs_check(const Mat& Y, double tol);

}  // namespace gtlab::cs
