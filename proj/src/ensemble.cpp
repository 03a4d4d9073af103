#include "qcm/ensemble.hpp"

#include <atomic>
#include <exception>
#include <mutex>
#include <sstream>
#include <thread>

namespace qcm {

EnsembleResult run_ensemble(const MeasurementModel& model,
                            const MasterSolution& master,
                            const RunConfig& config) {
    if (config.n_traj < 2)
        throw std::invalid_argument("run_ensemble: n_traj must be at least 2");
    if (config.snapshot_stride < 1 ||
        config.grid.n_steps % config.snapshot_stride != 0)
        throw std::invalid_argument(
            "run_ensemble: snapshot_stride must divide n_steps");

    const ModelOps ops(model);
    const int n_snaps = config.grid.n_steps / config.snapshot_stride + 1;

    EnsembleResult result;
    result.config = config;
    result.snapshots.resize(n_snaps);
    for (int s = 0; s < n_snaps; ++s) {
        EnsembleSnapshot& snap = result.snapshots[s];
        snap.t = config.grid.time_of(s * config.snapshot_stride);
        snap.states.resize(config.n_traj);
        snap.m_samples.resize(config.n_traj);
        snap.mu_samples.resize(config.n_traj);
        snap.log_p.resize(config.n_traj);
        snap.log_q.resize(config.n_traj);
        snap.W.resize(config.n_traj);
        snap.N.resize(config.n_traj);
    }

    // each trajectory owns its slot in every snapshot, so writes are
    // race-free and the layout is independent of scheduling
    std::atomic<int> next_traj{0};
    std::mutex error_mutex;
    std::exception_ptr first_error;
    int failed_stream = -1;

    auto worker = [&]() {
        for (;;) {
            const int i = next_traj.fetch_add(1);
            if (i >= config.n_traj) return;
            {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (first_error) return;
            }
            try {
                RngStream rng(RngStreamSpec{config.master_seed,
                                            static_cast<std::uint64_t>(i)});
                const auto path =
                    simulate_trajectory(ops, master, config.grid, config.mode,
                                        rng, config.snapshot_stride);
                for (std::size_t s = 0; s < path.size(); ++s) {
                    EnsembleSnapshot& snap = result.snapshots[s];
                    const TrajectoryState& st = path[s];
                    snap.states[i] = st.rho;
                    snap.m_samples[i] = st.m;
                    snap.mu_samples[i] = st.mu;
                    snap.log_p[i] = st.log_p;
                    snap.log_q[i] = st.log_q;
                    snap.W[i] = st.W;
                    snap.N[i] = st.N;
                }
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!first_error) {
                    first_error = std::current_exception();
                    failed_stream = i;
                }
                return;
            }
        }
    };

    const int n_workers = std::max(1, config.n_workers);
    if (n_workers == 1) {
        worker();
    } else {
        std::vector<std::thread> threads;
        threads.reserve(n_workers);
        for (int w = 0; w < n_workers; ++w) threads.emplace_back(worker);
        for (std::thread& th : threads) th.join();
    }

    if (first_error) {
        try {
            std::rethrow_exception(first_error);
        } catch (const std::exception& e) {
            std::ostringstream msg;
            msg << "trajectory stream " << failed_stream << " failed: "
                << e.what();
            throw std::runtime_error(msg.str());
        }
    }
    return result;
}

SnapshotStats reduce_snapshot(const EnsembleSnapshot& snap) {
    const std::size_t n = snap.states.size();
    if (n == 0) throw EmptyEnsemble("reduce_snapshot: empty snapshot");

    SnapshotStats stats;
    stats.mean_state = Mat::Zero(snap.states[0].rows(), snap.states[0].cols());
    for (const Mat& s : snap.states) stats.mean_state += s;
    stats.mean_state /= stats.mean_state.trace().real();

    const std::size_t nj = snap.m_samples[0].size();
    const std::size_t nk = snap.mu_samples[0].size();
    stats.mean_m.assign(nj, 0.0);
    stats.var_m.assign(nj, 0.0);
    stats.mean_mu.assign(nk, 0.0);
    stats.mean_W.assign(nj, 0.0);
    stats.mean_N.assign(nk, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < nj; ++j) {
            stats.mean_m[j] += snap.m_samples[i][j];
            stats.mean_W[j] += snap.W[i][j];
        }
        for (std::size_t k = 0; k < nk; ++k) {
            stats.mean_mu[k] += snap.mu_samples[i][k];
            stats.mean_N[k] += static_cast<double>(snap.N[i][k]);
        }
    }
    for (double& v : stats.mean_m) v /= static_cast<double>(n);
    for (double& v : stats.mean_mu) v /= static_cast<double>(n);
    for (double& v : stats.mean_W) v /= static_cast<double>(n);
    for (double& v : stats.mean_N) v /= static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < nj; ++j) {
            const double d = snap.m_samples[i][j] - stats.mean_m[j];
            stats.var_m[j] += d * d;
        }
    for (double& v : stats.var_m) v /= static_cast<double>(n); // population
    return stats;
}

} // namespace qcm
