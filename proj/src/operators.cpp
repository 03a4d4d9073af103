#include "qcm/operators.hpp"

#include <cmath>
#include <limits>

namespace qcm {

double herm_defect(const Mat& a) {
    return (a - a.adjoint()).cwiseAbs().maxCoeff();
}

Mat symmetrize(const Mat& a) { return 0.5 * (a + a.adjoint()); }

EigenSystem eigh(const Mat& a) {
    if (a.rows() != a.cols() || a.rows() < 1)
        throw DimMismatch("eigh: operator must be square and non-empty");
    if (herm_defect(a) > tol_herm)
        throw NotHermitian("eigh: Hermiticity defect exceeds tolerance");
    Eigen::SelfAdjointEigenSolver<Mat> solver(symmetrize(a));
    if (solver.info() != Eigen::Success)
        throw std::runtime_error("eigh: eigensolver failed to converge");
    return EigenSystem{solver.eigenvalues(), solver.eigenvectors()};
}

double von_neumann_entropy(const Mat& rho) {
    const EigenSystem es = eigh(rho);
    double s = 0.0;
    for (Eigen::Index i = 0; i < es.eigenvalues.size(); ++i) {
        const double lam = es.eigenvalues[i];
        if (lam > eig_floor) s -= lam * std::log(lam);
    }
    return s;
}

double quantum_relative_entropy(const Mat& sigma, const Mat& tau) {
    if (sigma.rows() != tau.rows())
        throw DimMismatch("quantum_relative_entropy: dimension mismatch");
    const EigenSystem es_s = eigh(sigma);
    const EigenSystem es_t = eigh(tau);
    const Eigen::Index n = es_s.eigenvalues.size();

    double tr_s_ln_s = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        const double lam = es_s.eigenvalues[i];
        if (lam > eig_floor) tr_s_ln_s += lam * std::log(lam);
    }

    // Tr{sigma ln tau} in the eigenbasis of tau; a kernel direction of tau
    // carrying sigma-weight means disjoint support.
    double tr_s_ln_t = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        const double mu = es_t.eigenvalues[i];
        const double w =
            (es_t.eigenvectors.col(i).adjoint() * sigma * es_t.eigenvectors.col(i))
                .value()
                .real();
        if (mu <= eig_floor) {
            if (w > support_tol) return std::numeric_limits<double>::infinity();
            continue;
        }
        tr_s_ln_t += w * std::log(mu);
    }
    return tr_s_ln_s - tr_s_ln_t;
}

double classical_relative_entropy(const std::vector<double>& p,
                                  const std::vector<double>& q) {
    if (p.size() != q.size())
        throw DimMismatch("classical_relative_entropy: length mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (p[i] <= eig_floor) continue;
        if (q[i] <= eig_floor) return std::numeric_limits<double>::infinity();
        s += p[i] * std::log(p[i] / q[i]);
    }
    return s;
}

namespace {

// Scalar weight of the (i, j) matrix-element pair after the u-integration.
// log1p keeps near-degenerate eigenvalue pairs accurate.
double pair_weight(double li, double lj, ResolventForm form) {
    const double diff = lj - li;
    const bool equal = std::abs(diff) <= 1e-14 * std::max(li, lj);
    const double logratio_over_diff =
        equal ? 1.0 / li : std::log1p(diff / li) / diff;
    switch (form) {
        case ResolventForm::eta_a_eta_b:
            return li * lj * logratio_over_diff;
        case ResolventForm::a_eta_b_eta_sq:
            return lj * lj * logratio_over_diff;
        case ResolventForm::plain:
            return logratio_over_diff;
    }
    return 0.0;
}

} // namespace

double resolvent_pair_integral(const Mat& a, const Mat& b, const Mat& eta,
                               ResolventForm form) {
    if (a.rows() != eta.rows() || b.rows() != eta.rows())
        throw DimMismatch("resolvent_pair_integral: dimension mismatch");
    const EigenSystem es = eigh(eta);
    const Eigen::Index n = es.eigenvalues.size();
    if (es.eigenvalues[0] < eig_floor_bound)
        throw RankDeficient("resolvent_pair_integral: eta is rank deficient");

    const Mat at = es.eigenvectors.adjoint() * a * es.eigenvectors;
    const Mat bt = es.eigenvectors.adjoint() * b * es.eigenvectors;
    Complex acc(0.0, 0.0);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j)
            acc += at(i, j) * bt(j, i) *
                   pair_weight(es.eigenvalues[i], es.eigenvalues[j], form);
    return acc.real();
}

Mat floored_state(const Mat& rho, double floor_value) {
    const EigenSystem es = eigh(rho);
    RVec lam = es.eigenvalues.cwiseMax(floor_value);
    lam /= lam.sum();
    return es.eigenvectors * lam.asDiagonal() * es.eigenvectors.adjoint();
}

Mat log_from_eigensystem(const EigenSystem& es, double floor_value) {
    RVec loglam(es.eigenvalues.size());
    for (Eigen::Index i = 0; i < es.eigenvalues.size(); ++i)
        loglam[i] = std::log(std::max(es.eigenvalues[i], floor_value));
    return es.eigenvectors * loglam.asDiagonal() * es.eigenvectors.adjoint();
}

double trace_norm_herm(const Mat& a) {
    return eigh(a).eigenvalues.cwiseAbs().sum();
}

double trace_distance(const Mat& a, const Mat& b) {
    return 0.5 * trace_norm_herm(a - b);
}

} // namespace qcm
