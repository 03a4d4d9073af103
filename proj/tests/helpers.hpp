#pragma once

#include "qcm/information.hpp"
#include "qcm/rng.hpp"

#include <cmath>
#include <functional>

// Shared fixtures: Pauli matrices, reference models and test-only oracles.
namespace qcm::testing {

inline Mat pauli_x() {
    Mat m(2, 2);
    m << 0, 1, 1, 0;
    return m;
}
inline Mat pauli_y() {
    Mat m(2, 2);
    m << Complex(0, 0), Complex(0, -1), Complex(0, 1), Complex(0, 0);
    return m;
}
inline Mat pauli_z() {
    Mat m(2, 2);
    m << 1, 0, 0, -1;
    return m;
}
// basis {|e>, |g>}: lowering takes index 0 to index 1
inline Mat sigma_minus() {
    Mat m = Mat::Zero(2, 2);
    m(1, 0) = 1;
    return m;
}
inline Mat sigma_plus() { return sigma_minus().adjoint().eval(); }

inline Mat diag2(double a, double b) {
    Mat m = Mat::Zero(2, 2);
    m(0, 0) = a;
    m(1, 1) = b;
    return m;
}

inline MeasurementModel single_segment_model(int dim, Mat initial, Mat h,
                                             std::vector<Mat> lindblad,
                                             std::vector<Mat> diffusive,
                                             std::vector<JumpChannel> jumps,
                                             double t_max) {
    MeasurementModel model;
    model.dim = dim;
    model.initial_state = std::move(initial);
    ModelSegment seg;
    seg.t_start = 0.0;
    seg.t_end = t_max;
    seg.hamiltonian = std::move(h);
    seg.lindblad_ops = std::move(lindblad);
    seg.diffusive_ops = std::move(diffusive);
    seg.jump_channels = std::move(jumps);
    model.segments.push_back(std::move(seg));
    return model;
}

/// Generic qubit: homodyne plus counting plus unmonitored pump/dephasing.
/// The pump keeps every state safely in the interior of the state space.
inline MeasurementModel generic_qubit(double t_max = 1.0) {
    const Mat h = 0.5 * pauli_z() + 0.3 * pauli_x();
    const Mat r = 0.6 * sigma_minus();
    JumpChannel jump;
    jump.kraus_ops = {0.5 * sigma_minus()};
    jump.rate = 0.4;
    const Mat rho0 =
        0.5 * Mat::Identity(2, 2) + 0.15 * pauli_z() + 0.1 * pauli_x();
    return single_segment_model(
        2, rho0, h, {0.35 * sigma_plus(), 0.25 * pauli_z()}, {r}, {jump},
        t_max);
}

/// Autonomous model with all operators and the initial state diagonal:
/// the derivative bound is tight here.
inline MeasurementModel commuting_diagonal(double t_max = 1.0) {
    JumpChannel jump;
    jump.kraus_ops = {diag2(0.7, 1.1)};
    jump.rate = 0.5;
    return single_segment_model(2, diag2(0.3, 0.7), diag2(0.4, -0.2),
                                {diag2(0.2, 0.6)}, {diag2(0.9, 0.3)}, {jump},
                                t_max);
}

/// R + R^dag proportional to the identity and J proportional to the
/// identity: no information is extracted whatever the initial state.
inline MeasurementModel non_informative(const Mat& rho0, double t_max = 1.0) {
    const Mat r = 0.5 * Mat::Identity(2, 2) + Complex(0, 0.3) * pauli_z();
    const double theta = 0.7;
    Mat u(2, 2);
    u << std::cos(theta), Complex(0, -std::sin(theta)),
        Complex(0, -std::sin(theta)), std::cos(theta); // exp(-i theta sigma_x)
    JumpChannel jump;
    jump.kraus_ops = {std::sqrt(0.3) * u};
    jump.rate = 0.3;
    return single_segment_model(2, rho0, 0.4 * pauli_x(), {}, {r}, {jump},
                                t_max);
}

/// Monitored decay: the a priori state converges to the pure ground state.
inline MeasurementModel decay_qubit(double gamma, double t_max) {
    JumpChannel jump;
    jump.kraus_ops = {std::sqrt(gamma) * sigma_minus()};
    jump.rate = gamma;
    return single_segment_model(2, diag2(1.0, 0.0), 0.2 * pauli_z(), {}, {},
                                {jump}, t_max);
}

/// Three-level ladder with diffusive and counting monitoring.
inline MeasurementModel qutrit_ladder(double t_max = 1.0) {
    Mat lower = Mat::Zero(3, 3);
    lower(1, 0) = 1.0;
    lower(2, 1) = std::sqrt(2.0);
    Mat h = Mat::Zero(3, 3);
    h(0, 0) = 0.5;
    h(2, 2) = -0.5;
    h += 0.2 * (lower + lower.adjoint());
    JumpChannel jump;
    jump.kraus_ops = {0.4 * lower};
    jump.rate = 0.3;
    Mat rho0 = Mat::Zero(3, 3);
    rho0(0, 0) = 0.5;
    rho0(1, 1) = 0.3;
    rho0(2, 2) = 0.2;
    return single_segment_model(3, rho0, h, {0.3 * lower.adjoint()},
                                {0.4 * lower}, {jump}, t_max);
}

inline Mat random_complex_matrix(int dim, RngStream& rng) {
    Mat m(dim, dim);
    for (int i = 0; i < dim; ++i)
        for (int j = 0; j < dim; ++j) m(i, j) = Complex(rng.normal(), rng.normal());
    return m;
}

inline Mat random_hermitian(int dim, RngStream& rng) {
    const Mat g = random_complex_matrix(dim, rng);
    return 0.5 * (g + g.adjoint());
}

inline Mat random_density(int dim, RngStream& rng) {
    const Mat g = random_complex_matrix(dim, rng);
    Mat rho = g * g.adjoint();
    rho /= rho.trace().real();
    return rho;
}

/// Random CPTP map as a normalized Kraus set.
inline std::vector<Mat> random_kraus_set(int dim, int n_kraus, RngStream& rng) {
    std::vector<Mat> kraus;
    Mat s = Mat::Zero(dim, dim);
    for (int i = 0; i < n_kraus; ++i) {
        kraus.push_back(random_complex_matrix(dim, rng));
        s += kraus.back().adjoint() * kraus.back();
    }
    // normalize: K_i <- K_i s^{-1/2}
    Eigen::SelfAdjointEigenSolver<Mat> es(s);
    const Mat inv_sqrt = es.eigenvectors() *
                         es.eigenvalues().cwiseSqrt().cwiseInverse().asDiagonal() *
                         es.eigenvectors().adjoint();
    for (Mat& k : kraus) k = k * inv_sqrt;
    return kraus;
}

inline Mat apply_kraus(const std::vector<Mat>& kraus, const Mat& rho) {
    Mat out = Mat::Zero(rho.rows(), rho.cols());
    for (const Mat& k : kraus) out += k * rho * k.adjoint();
    return out;
}

/// Adaptive Simpson quadrature, used as the independent oracle for the
/// closed-form resolvent integrals.
inline double adaptive_simpson(const std::function<double(double)>& f, double a,
                               double b, double tol, int depth = 24) {
    const auto simpson = [&](double lo, double hi) {
        return (hi - lo) / 6.0 * (f(lo) + 4.0 * f(0.5 * (lo + hi)) + f(hi));
    };
    std::function<double(double, double, double, double, int)> recurse =
        [&](double lo, double hi, double whole, double eps, int d) -> double {
        const double mid = 0.5 * (lo + hi);
        const double left = simpson(lo, mid);
        const double right = simpson(mid, hi);
        if (d <= 0 || std::abs(left + right - whole) < 15.0 * eps)
            return left + right + (left + right - whole) / 15.0;
        return recurse(lo, mid, left, 0.5 * eps, d - 1) +
               recurse(mid, hi, right, 0.5 * eps, d - 1);
    };
    return recurse(a, b, simpson(a, b), tol, depth);
}

/// Quadrature oracle for resolvent_pair_integral via u = x/(1-x).
inline double resolvent_integral_quadrature(const Mat& a, const Mat& b,
                                            const Mat& eta, ResolventForm form) {
    const int dim = static_cast<int>(eta.rows());
    const Mat id = Mat::Identity(dim, dim);
    const auto integrand_u = [&](double u) {
        const Mat res = (u * id + eta).inverse();
        switch (form) {
            case ResolventForm::eta_a_eta_b:
                return (a * eta * res * b * eta * res).trace().real();
            case ResolventForm::a_eta_b_eta_sq:
                return (res * a * eta * eta * res * b).trace().real();
            case ResolventForm::plain:
                return (res * a * res * b).trace().real();
        }
        return 0.0;
    };
    const auto integrand_x = [&](double x) {
        if (x >= 1.0) {
            switch (form) { // exact u -> infinity limits of (1-x)^-2 f
                case ResolventForm::eta_a_eta_b:
                    return (a * eta * b * eta).trace().real();
                case ResolventForm::a_eta_b_eta_sq:
                    return (a * eta * eta * b).trace().real();
                case ResolventForm::plain:
                    return (a * b).trace().real();
            }
        }
        const double u = x / (1.0 - x);
        return integrand_u(u) / ((1.0 - x) * (1.0 - x));
    };
    return adaptive_simpson(integrand_x, 0.0, 1.0, 1e-12);
}

} // namespace qcm::testing
