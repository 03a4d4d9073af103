#pragma once

#include "qcm/model.hpp"
#include "qcm/rng.hpp"

#include <cstdint>
#include <utility>
#include <vector>

// Propagation: RK4 for the a priori (master equation) state, Euler-Maruyama
// jump-diffusion steps for the conditional states, and pathwise accumulation
// of the log likelihood ratios ln p_t and ln q_t.
namespace qcm {

struct NonPhysicalState : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct IntensityOverflow : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct TraceCollapse : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Abort threshold for per-step PSD clips on SDE trajectories. The plain
// Euler-Maruyama diffusive increment lacks the second-order dW^2 R rho R^dag
// sandwich term, so near-pure states incur inherent clips of order
// dt * ||R||^2 per step; only clips far beyond that scale indicate a real
// integration failure. The master-equation solver keeps its own tighter
// 1e-6 guard, since RK4 clips there are pure roundoff.
inline constexpr double step_clip_limit = 1e-3;

struct TimeGrid {
    double t_max = 0.0;
    double dt = 1e-3;
    int n_steps = 0;

    /// t_max must be an integer multiple of dt.
    static TimeGrid make(double t_max, double dt);
    double time_of(int step) const { return step * dt; }
};

/// Per-step jump-resolution guard: dt * rate and dt * intensity should stay
/// well below one. Returns human-readable warnings, empty when fine.
std::vector<std::string> grid_guard_warnings(const MeasurementModel& model,
                                             const TimeGrid& grid);

// Cached per-segment operator products for the hot loops.
struct SegmentOps {
    const ModelSegment* seg = nullptr;
    std::vector<Mat> jump_totals; // J_k
    std::vector<Mat> r_plus_rdag; // R_j + R_j^dag
    std::vector<double> rates;    // lambda_k
};

struct ModelOps {
    explicit ModelOps(const MeasurementModel& model);
    const SegmentOps& at(double t) const;
    const MeasurementModel* model = nullptr;
    std::vector<SegmentOps> segments;
};

Mat liouvillian_apply(const SegmentOps& ops, const Mat& rho);

/// A priori evolution plus the deterministic output moments n_j, nu_k.
struct MasterSolution {
    TimeGrid grid;
    std::vector<Mat> eta;                // per grid point
    std::vector<std::vector<double>> n;  // [step][j]
    std::vector<std::vector<double>> nu; // [step][k]
    double max_clip = 0.0;               // largest PSD clip in trace norm
};

MasterSolution solve_master(const MeasurementModel& model, const TimeGrid& grid);

enum class UnravelingMode { linear, nonlinear };

/// One trajectory's running record.
struct TrajectoryState {
    double t = 0.0;
    int step = 0;
    Mat rho;                 // a posteriori state (sigma_t / p_t in linear mode)
    double log_p = 0.0;      // ln p_t
    double log_q = 0.0;      // ln q_t
    std::vector<double> W;   // output Wiener paths
    std::vector<long> N;     // jump counts
    std::vector<double> m;   // last-step diffusive conditional means
    std::vector<double> mu;  // last-step jump intensities
    double min_eig_seen = 0.0; // most negative eigenvalue before clipping
    double max_clip = 0.0;     // largest PSD clip in trace norm
};

TrajectoryState make_initial_state(const MeasurementModel& model);

struct NoiseDraw {
    std::vector<double> dW;          // Normal(0, dt) increments
    std::vector<std::uint8_t> jump_flags; // at most one jump per channel per step
};

/// Increments of (ln p, ln q) over one step. dW_Q are the increments of the
/// output process W under the reference measure; (m, mu) are trajectory
/// values at the left limit, (n, nu) the a priori moments at the same time.
std::pair<double, double> accumulate_log_densities(
    const std::vector<double>& m, const std::vector<double>& mu,
    const std::vector<double>& n, const std::vector<double>& nu,
    const std::vector<double>& rates, const std::vector<double>& dW_Q,
    const std::vector<std::uint8_t>& jump_flags, double dt);

/// Euler-Maruyama step of the nonlinear SDE under the physical law;
/// draw.dW are the innovation increments.
TrajectoryState step_nonlinear(const ModelOps& ops, const MasterSolution& master,
                               const TrajectoryState& state, const NoiseDraw& draw,
                               double dt);

/// Euler-Maruyama step of the linear SDE under the reference measure;
/// draw.jump_flags use the reference rates.
TrajectoryState step_linear(const ModelOps& ops, const MasterSolution& master,
                            const TrajectoryState& state, const NoiseDraw& draw,
                            double dt);

/// Jump intensities mu_k for the current state (reference rates in linear
/// mode); used to draw jump flags ahead of a step.
std::vector<double> jump_intensities(const SegmentOps& ops, const Mat& rho,
                                     UnravelingMode mode);

/// Draw one step's noise: diffusive normals first, then one uniform per jump
/// channel, in channel order. The order is part of the stream contract.
NoiseDraw draw_noise(const SegmentOps& ops, const Mat& rho, UnravelingMode mode,
                     double dt, RngStream& rng);

/// Full path on the grid; snapshots every `snapshot_stride` steps (step 0
/// included). Deterministic for a given stream.
std::vector<TrajectoryState> simulate_trajectory(
    const ModelOps& ops, const MasterSolution& master, const TimeGrid& grid,
    UnravelingMode mode, RngStream& rng, int snapshot_stride = 1);

} // namespace qcm
