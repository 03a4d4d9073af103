#pragma once

#include <Eigen/Dense>
#include <complex>
#include <stdexcept>
#include <vector>

// Dense complex operator algebra: Hermitian eigendecomposition, entropy
// primitives and the resolvent integrals needed by the information bound.
namespace qcm {

using Complex = std::complex<double>;
using Mat = Eigen::MatrixXcd;
using RVec = Eigen::VectorXd;

// Shared numerical tolerances.
inline constexpr double tol_herm = 1e-10;
inline constexpr double tol_psd = 1e-10;
inline constexpr double tol_trace = 1e-9;
inline constexpr double eig_floor = 1e-14;       // 0 ln 0 := 0 cutoff in entropy sums
inline constexpr double eig_floor_bound = 1e-12; // state flooring ahead of the bound integrals
inline constexpr double support_tol = 1e-10;
inline constexpr double intensity_floor = 1e-12;

struct NotHermitian : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct DimMismatch : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct RankDeficient : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Eigendecomposition of a Hermitian operator, eigenvalues ascending.
struct EigenSystem {
    RVec eigenvalues;
    Mat eigenvectors; // unitary, columns are eigenvectors
};

/// Max absolute deviation of A from its conjugate transpose.
double herm_defect(const Mat& a);

/// (A + A^dag)/2; absorbs floating-point drift from SDE steps.
Mat symmetrize(const Mat& a);

/// Hermitian eigendecomposition. Throws NotHermitian when the defect
/// exceeds tol_herm.
EigenSystem eigh(const Mat& a);

/// -Tr{rho ln rho} in nats; eigenvalues below eig_floor contribute zero.
double von_neumann_entropy(const Mat& rho);

/// Tr{sigma(ln sigma - ln tau)} in nats. Returns +infinity when the support
/// of sigma is not contained in the support of tau (eigen-projection overlap
/// above support_tol on a tau-kernel direction).
double quantum_relative_entropy(const Mat& sigma, const Mat& tau);

/// Discrete Kullback-Leibler divergence; +infinity if p charges a zero of q.
double classical_relative_entropy(const std::vector<double>& p,
                                  const std::vector<double>& q);

// Integrand shapes of the u-integrals appearing in the information bound,
// all integrated over u in [0, infinity):
//   eta_a_eta_b:    Tr{ A eta(u+eta)^-1 B eta(u+eta)^-1 }
//   a_eta_b_eta_sq: Tr{ (u+eta)^-1 A eta^2 (u+eta)^-1 B }
//   plain:          Tr{ (u+eta)^-1 A (u+eta)^-1 B }
enum class ResolventForm { eta_a_eta_b, a_eta_b_eta_sq, plain };

/// Closed-form evaluation of the resolvent pair integral in the eigenbasis
/// of eta. eta must be full rank: throws RankDeficient if an eigenvalue is
/// below eig_floor_bound.
double resolvent_pair_integral(const Mat& a, const Mat& b, const Mat& eta,
                               ResolventForm form);

/// Floor the eigenvalues of a state at floor_value and renormalize to unit
/// trace. Keeps the bound integrals finite for nearly rank-deficient states.
Mat floored_state(const Mat& rho, double floor_value = eig_floor_bound);

/// ln of a positive operator from its eigensystem, eigenvalues floored.
Mat log_from_eigensystem(const EigenSystem& es, double floor_value);

/// Trace norm ||A||_1 of a Hermitian operator.
double trace_norm_herm(const Mat& a);

/// (1/2)||a - b||_1 for Hermitian a, b.
double trace_distance(const Mat& a, const Mat& b);

} // namespace qcm
