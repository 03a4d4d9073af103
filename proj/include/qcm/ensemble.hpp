#pragma once

#include "qcm/dynamics.hpp"

#include <cstdint>

// Monte Carlo orchestration: reproducible per-trajectory streams, parallel
// execution, snapshot collection and fixed-order reduction. Results are
// bit-identical for a given master seed regardless of the worker count.
namespace qcm {

struct EmptyEnsemble : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct RunConfig {
    int n_traj = 2;
    std::uint64_t master_seed = 0;
    TimeGrid grid;
    UnravelingMode mode = UnravelingMode::nonlinear;
    int snapshot_stride = 1;
    int n_workers = 1;
};

/// Cross-section of the ensemble at one snapshot time; the empirical stand-in
/// for the physical law at that time.
struct EnsembleSnapshot {
    double t = 0.0;
    std::vector<Mat> states;                    // rho_t per trajectory
    std::vector<std::vector<double>> m_samples; // [traj][j]
    std::vector<std::vector<double>> mu_samples;// [traj][k]
    std::vector<double> log_p;                  // per trajectory
    std::vector<double> log_q;
    std::vector<std::vector<double>> W;         // [traj][j]
    std::vector<std::vector<long>> N;           // [traj][k]
};

struct EnsembleResult {
    RunConfig config;
    std::vector<EnsembleSnapshot> snapshots; // one per stored grid time
};

/// Run n_traj independent trajectories. A failed trajectory aborts the whole
/// run (silent dropout would bias the estimators).
EnsembleResult run_ensemble(const MeasurementModel& model,
                            const MasterSolution& master, const RunConfig& config);

struct SnapshotStats {
    Mat mean_state;                    // renormalized ensemble mean
    std::vector<double> mean_m;        // per diffusive channel
    std::vector<double> var_m;         // population variance
    std::vector<double> mean_mu;       // per jump channel
    std::vector<double> mean_W;
    std::vector<double> mean_N;
};

/// Fixed ascending-index reduction of one snapshot.
SnapshotStats reduce_snapshot(const EnsembleSnapshot& snap);

} // namespace qcm
