#include "gtlab/cs_linalg.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

namespace gtlab::cs {

Mat canonical_j(int n) {
    Mat J = Mat::Zero(2 * n, 2 * n);
    J.topRightCorner(n, n) = -Mat::Identity(n, n);
    J.bottomLeftCorner(n, n) = Mat::Identity(n, n);
    return J;
}

CSMatrix validate_cs(const Mat& M, double tol) {
    if (M.rows() != M.cols()) throw OddDimension("validate_cs: matrix not square");
    if (M.rows() % 2 != 0) throw OddDimension("validate_cs: odd dimension");
    const int n = static_cast<int>(M.rows()) / 2;
    Mat J = canonical_j(n);
    Mat C = M.transpose() * J * M;
    // least squares over C = mu J: mu = <C,J>_F / <J,J>_F, <J,J>_F = 2n
    double mu = (J.cwiseProduct(C)).sum() / (2.0 * n);
    double residual = (C - mu * J).cwiseAbs().maxCoeff();
    double det = M.determinant();
    if (std::abs(det) <= tol) throw Singular("validate_cs: |det| <= tol");
    if (!(mu > 0.0) || residual > tol)
        throw NotConformal("validate_cs: residual " + std::to_string(residual) +
                           " at mu " + std::to_string(mu));
    return CSMatrix{M, mu, tol, residual};
}

PairingReport eigen_pairing(const CSMatrix& M, double pairing_tol, double band) {
    Eigen::EigenSolver<Mat> es(M.entries);
    if (es.info() != Eigen::Success)
        throw PairingFailure("eigen_pairing: eigensolver did not converge");
    const auto& ev = es.eigenvalues();
    const int m = static_cast<int>(ev.size());

    std::vector<int> order(m);
    for (int i = 0; i < m; ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        double ma = std::abs(ev[a]), mb = std::abs(ev[b]);
        if (ma != mb) return ma > mb;
        return ev[a].imag() > ev[b].imag();
    });

    std::vector<bool> used(m, false);
    PairingReport rep;
    rep.worst_residual = 0.0;
    for (int oi = 0; oi < m; ++oi) {
        int i = order[oi];
        if (used[i]) continue;
        used[i] = true;
        int best = -1;
        double best_err = std::numeric_limits<double>::infinity();
        for (int oj = 0; oj < m; ++oj) {
            int j = order[oj];
            if (used[j]) continue;
            double err = std::abs(ev[i] * ev[j] - std::complex<double>(M.mu, 0.0));
            if (err < best_err) {
                best_err = err;
                best = j;
            }
        }
        if (best < 0) throw PairingFailure("eigen_pairing: odd leftover");
        used[best] = true;
        rep.pairs.push_back({ev[i], ev[best]});
        rep.worst_residual = std::max(rep.worst_residual, best_err);
    }
    double scale = std::max(1.0, std::abs(M.mu));
    if (rep.worst_residual > pairing_tol * scale)
        throw PairingFailure("eigen_pairing: worst residual " +
                             std::to_string(rep.worst_residual));
    rep.hyperbolic = true;
    for (int i = 0; i < m; ++i) {
        double mod = std::abs(ev[i]);
        if (mod >= 1.0 - band && mod <= 1.0 + band) rep.hyperbolic = false;
    }
    return rep;
}

int conjugate_index(int k, int n) { return (k + n - 1) % (2 * n) + 1; }

Mat rotation(double theta, int i, int j, int n) {
    if (!(1 <= i && i < j && j <= 2 * n))
        throw IndexOutOfRange("rotation: need 1 <= i < j <= 2n");
    Mat R = Mat::Identity(2 * n, 2 * n);
    double c = std::cos(theta), s = std::sin(theta);
    R(i - 1, i - 1) = c;
    R(i - 1, j - 1) = -s;
    R(j - 1, i - 1) = s;
    R(j - 1, j - 1) = c;
    return R;
}

Mat rotation_unordered(double theta, int a, int b, int n) {
    return rotation(theta, std::min(a, b), std::max(a, b), n);
}

CSMatrix word_product(const std::vector<CSMatrix>& word, int dim_if_empty) {
    if (word.empty()) {
        CSMatrix id;
        id.entries = Mat::Identity(dim_if_empty, dim_if_empty);
        id.mu = 1.0;
        id.tol = 0.0;
        id.residual = 0.0;
        return id;
    }
    Mat P = word.front().entries;
    double mu = word.front().mu;
    double tol = word.front().tol;
    for (size_t k = 1; k < word.size(); ++k) {
        if (word[k].entries.cols() != P.rows())
            throw DimensionMismatch("word_product: letter " + std::to_string(k));
        P = word[k].entries * P;
        mu *= word[k].mu;
        tol = std::max(tol, word[k].tol);
    }
    double scale = std::pow(P.cwiseAbs().maxCoeff(), 2);
    CSMatrix out = validate_cs(P, std::max(tol, 1e-9 * std::max(1.0, scale)));
    if (std::abs(out.mu - mu) > 1e-9 * std::abs(mu))
        throw NotConformal("word_product: mu drifted from letter product");
    return out;
}

namespace {

Mat orthonormal_basis(const Mat& B) {
    Eigen::HouseholderQR<Mat> qr(B);
    Mat Q = qr.householderQ() * Mat::Identity(B.rows(), B.cols());
    return Q;
}

double spectral_norm(const Mat& A) {
    return A.jacobiSvd().singularValues()(0);
}

double subspace_angle_residual(const Mat& Q_target, const Mat& image) {
    Mat Qi = orthonormal_basis(image);
    Mat defect = Qi - Q_target * (Q_target.transpose() * Qi);
    return spectral_norm(defect);  // sin of the largest principal angle
}

}  // namespace

DominationResult l_domination_test(const PeriodicLinearSystem& sys,
                                   const SplitSpec& split, int l,
                                   double angle_tol) {
    if (l <= 0) throw std::invalid_argument("l_domination_test: l must be positive");
    const int P = static_cast<int>(sys.letters.size());
    if (P == 0) throw std::invalid_argument("l_domination_test: empty system");
    Mat QF = orthonormal_basis(split.F);
    Mat QG = orthonormal_basis(split.G);
    for (const auto& L : sys.letters) {
        if (subspace_angle_residual(QF, L.entries * QF) > angle_tol)
            throw NotInvariantSplit("l_domination_test: F not invariant");
        if (subspace_angle_residual(QG, L.entries * QG) > angle_tol)
            throw NotInvariantSplit("l_domination_test: G not invariant");
    }
    DominationResult res;
    res.worst_ratio = 0.0;
    for (int p = 0; p < P; ++p) {
        Mat A = Mat::Identity(sys.letters[0].dim(), sys.letters[0].dim());
        for (int s = 0; s < l; ++s) A = sys.letters[(p + s) % P].entries * A;
        double forward = spectral_norm(A * QF);
        double backward = spectral_norm(A.inverse() * QG);
        res.worst_ratio = std::max(res.worst_ratio, forward * backward);
    }
    res.dominated = res.worst_ratio < 0.5;
    return res;
}

std::optional<double> mane_complexify(const CSMatrix& M, double alpha,
                                      double grid_step) {
    if (M.dim() != 2) throw DimensionMismatch("mane_complexify: need 2x2");
    if (M.entries.determinant() <= 0.0)
        throw std::invalid_argument("mane_complexify: det must be positive");
    if (grid_step <= 0.0)
        throw std::invalid_argument("mane_complexify: grid step must be positive");
    double det = M.entries.determinant();
    auto complex_at = [&](double s) {
        Mat R = rotation(s * alpha, 1, 2, 1);
        double tr = (R * M.entries).trace();
        return tr * tr - 4.0 * det < 0.0;
    };
    const long kmax = static_cast<long>(std::floor(1.0 / grid_step + 1e-12));
    if (complex_at(0.0)) return 0.0;
    for (long k = 1; k <= kmax; ++k) {
        double s = k * grid_step;
        if (complex_at(s)) return s;
        if (complex_at(-s)) return -s;
    }
    return std::nullopt;
}

CSMatrix mixing_isotopy(const CSMatrix& B, int j, int k, double alpha, double t) {
    const int n = B.half_dim();
    if (!(1 <= j && j < k + 1 && k + 1 <= 2 * n))
        throw IndexOutOfRange("mixing_isotopy: need 1 <= j < k+1 <= 2n");
    Mat R1 = rotation_unordered(t * alpha, j, k + 1, n);
    Mat R2 = rotation_unordered(t * alpha, conjugate_index(j, n),
                                conjugate_index(k + 1, n), n);
    Mat out = R2 * R1 * B.entries;
    double scale = std::max(1.0, std::pow(out.cwiseAbs().maxCoeff(), 2));
    return validate_cs(out, std::max(B.tol, 1e-10 * scale));
}

namespace {

struct WordState {
    std::vector<int> points;
    std::vector<int> powers;
};

const std::vector<CSMatrix>& transition_word(const PeriodicLinearSystem& sys,
                                             int to, int from) {
    auto it = sys.transitions.find({to, from});
    if (it == sys.transitions.end())
        throw MissingTransition("homothety_search: missing transition (" +
                                std::to_string(to) + "," + std::to_string(from) + ")");
    return it->second;
}

}  // namespace

std::optional<HomothetyWord> homothety_search(const PeriodicLinearSystem& sys,
                                              double epsilon, int max_power,
                                              int max_blocks) {
    const int P = static_cast<int>(sys.letters.size());
    if (P == 0) throw std::invalid_argument("homothety_search: empty system");
    const int dim = sys.letters[0].dim();

    auto evaluate = [&](const WordState& w) -> std::optional<HomothetyWord> {
        Mat prod = Mat::Identity(dim, dim);
        std::string desc;
        auto apply_word = [&](const std::vector<CSMatrix>& ws) {
            for (const auto& m : ws) prod = m.entries * prod;
        };
        const int m = static_cast<int>(w.points.size());
        for (int b = 0; b < m; ++b) {
            int pt = w.points[b];
            for (int rep = 0; rep < w.powers[b]; ++rep)
                prod = sys.letters[pt].entries * prod;
            int next = (b + 1 < m) ? w.points[b + 1] : w.points[0];
            apply_word(transition_word(sys, next, pt));
            desc += "L" + std::to_string(pt) + "^" + std::to_string(w.powers[b]) +
                    " t(" + std::to_string(next) + "," + std::to_string(pt) + ") ";
        }
        double s = prod.trace() / dim;
        double res = (prod - s * Mat::Identity(dim, dim)).norm();
        double rel = res / prod.norm();
        if (rel <= epsilon) {
            double scale = std::max(1.0, std::pow(prod.cwiseAbs().maxCoeff(), 2));
            HomothetyWord hit;
            hit.description = desc;
            hit.product = validate_cs(prod, 1e-8 * scale);
            hit.scalar = s;
            hit.rel_residual = rel;
            return hit;
        }
        return std::nullopt;
    };

    // breadth by total letter count, then lexicographic: deterministic order
    for (int total = 1; total <= max_power * max_blocks; ++total) {
        for (int m = 1; m <= std::min(max_blocks, total); ++m) {
            std::vector<int> points(m, 0), powers(m, 1);
            // enumerate point sequences
            while (true) {
                // enumerate power compositions of `total` into m parts <= max_power
                std::function<std::optional<HomothetyWord>(int, int)> rec =
                    [&](int idx, int remaining) -> std::optional<HomothetyWord> {
                    if (idx == m) {
                        if (remaining != 0) return std::nullopt;
                        return evaluate({points, powers});
                    }
                    int slots = m - idx - 1;
                    for (int a = 1; a <= std::min(max_power, remaining - slots); ++a) {
                        powers[idx] = a;
                        if (auto hit = rec(idx + 1, remaining - a)) return hit;
                    }
                    return std::nullopt;
                };
                if (auto hit = rec(0, total)) return hit;
                // next point sequence (odometer, consecutive repeats allowed)
                int pos = m - 1;
                while (pos >= 0 && points[pos] == P - 1) points[pos--] = 0;
                if (pos < 0) break;
                ++points[pos];
            }
        }
    }
    return std::nullopt;
}

InfinitesimalCS infinitesimal_cs_check(const Mat& Y, double tol) {
    if (Y.rows() != Y.cols()) throw OddDimension("infinitesimal_cs_check: not square");
    if (Y.rows() % 2 != 0) throw OddDimension("infinitesimal_cs_check: odd dimension");
    const int n = static_cast<int>(Y.rows()) / 2;
    Mat J = canonical_j(n);
    Mat S = Y.transpose() * J + J * Y;
    double v = (J.cwiseProduct(S)).sum() / (2.0 * n);
    double residual = (S - v * J).cwiseAbs().maxCoeff();
    if (residual > tol)
        throw NotInfinitesimallyCS("infinitesimal_cs_check: residual " +
                                   std::to_string(residual));
    InfinitesimalCS out;
    out.entries = Y;
    out.v = v;
    out.residual = residual;
    out.beta = Y.topLeftCorner(n, n);
    out.gamma = Y.topRightCorner(n, n);
    out.alpha = Y.bottomLeftCorner(n, n);
    out.alpha_sym_residual = (out.alpha - out.alpha.transpose()).cwiseAbs().maxCoeff();
    out.gamma_sym_residual = (out.gamma - out.gamma.transpose()).cwiseAbs().maxCoeff();
    return out;
}

}  // namespace gtlab::cs
