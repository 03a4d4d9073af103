#pragma once

#include "qcm/ensemble.hpp"

// The three mutual entropies, the information-gain rate and the upper bound
// on its time derivative with the explicit gap, all estimated over ensemble
// snapshots. Entropies are in nats.
namespace qcm {

struct IntensityMismatch : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline constexpr double index_floor = 1e-9; // goodness-ratio denominator floor

struct EstimateWithError {
    double value = 0.0;
    double stderr_value = 0.0;
};

struct InfoRecord {
    double t = 0.0;
    double s_c = 0.0; // cumulative classical information gain
    double s_c_stderr = 0.0;
    double s_c_rate = 0.0; // dS_c/dt
    double s_c_rate_stderr = 0.0;
    double s_quantum = 0.0; // ensemble mean relative entropy to the a priori state
    double s_quantum_stderr = 0.0;
    double s_total = 0.0; // s_quantum + s_c
    double bound_rhs = 0.0;
    double bound_rhs_stderr = 0.0;
    double gap = 0.0;
    double gap_stderr = 0.0;
    double s_vn_eta = 0.0;          // von Neumann entropy of the a priori state
    double goodness_ratio = 0.0;    // NaN where s_vn_eta is below index_floor
    double pathwise_s_c = 0.0;      // mean of ln p_t - ln q_t (cross-check)
    double pathwise_s_c_stderr = 0.0;
};

struct InfoSeries {
    std::vector<InfoRecord> records;
};

/// (1/2) sum_j Var[m_j] + sum_k E[mu_k ln(mu_k / nu_k)] over the snapshot;
/// standard error from the per-trajectory influence values.
EstimateWithError info_gain_rate(const EnsembleSnapshot& snap,
                                 const MasterSolution& master);

/// Trapezoidal integral of the rate series up to records[up_to].
double classical_info_gain(const std::vector<InfoRecord>& records,
                           std::size_t up_to);

/// S_q(eta_t) - mean S_q(rho_t): the quantum mutual entropy in its
/// support-robust entropy-difference form.
EstimateWithError quantum_mutual(const EnsembleSnapshot& snap,
                                 const MasterSolution& master);

struct GoodnessIndexes {
    std::vector<double> instantaneous; // NaN marks missing values
    double cumulative = 0.0;           // trapezoid over non-missing spans
};

GoodnessIndexes goodness_indexes(const std::vector<InfoRecord>& records);

/// The entropy-derivative functional evaluated for one state: applied to the
/// a priori state it gives the analytic -d/du E[S_q(rho_u^t)] at u = t+; its
/// ensemble mean over a posteriori states gives -d/dt E[S_q(rho_t)].
double entropy_rate_functional(const MeasurementModel& model, double t,
                               const Mat& state);

/// Right-hand side of the derivative bound: functional(eta_t) minus the
/// ensemble mean of the functional over the a posteriori states.
EstimateWithError bound_rhs(const EnsembleSnapshot& snap,
                            const MasterSolution& master,
                            const MeasurementModel& model, double t);

/// Explicit bound-minus-rate gap, computed directly from the term-by-term
/// difference expression (not as bound_rhs - rate).
EstimateWithError bound_gap(const EnsembleSnapshot& snap,
                            const MasterSolution& master,
                            const MeasurementModel& model, double t);

/// Assemble the per-snapshot information series; the bound columns are
/// filled only when with_bound is set.
InfoSeries compute_info_series(const MeasurementModel& model,
                               const MasterSolution& master,
                               const EnsembleResult& ensemble, bool with_bound);

} // namespace qcm
