#include "qcm/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace qcm {

TimeGrid TimeGrid::make(double t_max, double dt) {
    if (!(dt > 0.0) || t_max < 0.0)
        throw std::invalid_argument("TimeGrid: need dt > 0 and t_max >= 0");
    const double steps = t_max / dt;
    const int n = static_cast<int>(std::llround(steps));
    if (std::abs(steps - n) > 1e-9 * std::max(1.0, steps))
        throw std::invalid_argument("TimeGrid: t_max must be a multiple of dt");
    return TimeGrid{t_max, dt, n};
}

std::vector<std::string> grid_guard_warnings(const MeasurementModel& model,
                                             const TimeGrid& grid) {
    std::vector<std::string> warnings;
    double max_rate = 0.0;
    for (const ModelSegment& seg : model.segments)
        for (const JumpChannel& ch : seg.jump_channels)
            max_rate = std::max(max_rate, ch.rate);
    if (grid.dt * max_rate > 0.1) {
        std::ostringstream msg;
        msg << "dt * max reference rate = " << grid.dt * max_rate
            << " exceeds 0.1; jump resolution is poor";
        warnings.push_back(msg.str());
    }
    return warnings;
}

ModelOps::ModelOps(const MeasurementModel& m) : model(&m) {
    segments.reserve(m.segments.size());
    for (const ModelSegment& seg : m.segments) {
        SegmentOps ops;
        ops.seg = &seg;
        for (const JumpChannel& ch : seg.jump_channels) {
            ops.jump_totals.push_back(ch.total_op());
            ops.rates.push_back(ch.rate);
        }
        for (const Mat& r : seg.diffusive_ops)
            ops.r_plus_rdag.push_back(r + r.adjoint());
        segments.push_back(std::move(ops));
    }
}

const SegmentOps& ModelOps::at(double t) const {
    const ModelSegment& seg = model->segment_at(t);
    return segments[static_cast<std::size_t>(&seg - model->segments.data())];
}

Mat liouvillian_apply(const SegmentOps& ops, const Mat& rho) {
    const ModelSegment& seg = *ops.seg;
    const Complex im(0.0, 1.0);
    Mat out = -im * (seg.hamiltonian * rho - rho * seg.hamiltonian);
    for (const Mat& l : seg.lindblad_ops) {
        const Mat lda = l.adjoint() * l;
        out.noalias() += l * rho * l.adjoint();
        out.noalias() -= 0.5 * (lda * rho + rho * lda);
    }
    for (const Mat& r : seg.diffusive_ops) {
        const Mat rda = r.adjoint() * r;
        out.noalias() += r * rho * r.adjoint();
        out.noalias() -= 0.5 * (rda * rho + rho * rda);
    }
    for (std::size_t k = 0; k < seg.jump_channels.size(); ++k) {
        out += jump_map(seg.jump_channels[k], rho);
        const Mat& j = ops.jump_totals[k];
        out.noalias() -= 0.5 * (j * rho + rho * j);
    }
    return out;
}

namespace {

// Symmetrize, clip negative eigenvalues and renormalize to unit trace.
// Returns the clip magnitude in trace norm; 2x2 states take an analytic
// fast path that skips the decomposition when already PSD.
double clip_and_normalize(Mat& rho, double& min_eig) {
    rho = 0.5 * (rho + rho.adjoint());
    if (rho.rows() == 2) {
        const double a = rho(0, 0).real();
        const double d = rho(1, 1).real();
        const double h = 0.5 * (a - d);
        const double disc = std::sqrt(h * h + std::norm(rho(0, 1)));
        const double lo = 0.5 * (a + d) - disc;
        min_eig = std::min(min_eig, lo);
        if (lo >= 0.0) {
            rho /= rho.trace().real();
            return 0.0;
        }
    }
    Eigen::SelfAdjointEigenSolver<Mat> solver(rho);
    min_eig = std::min(min_eig, solver.eigenvalues()[0]);
    double clip = 0.0;
    RVec lam = solver.eigenvalues();
    for (Eigen::Index i = 0; i < lam.size(); ++i)
        if (lam[i] < 0.0) {
            clip -= lam[i];
            lam[i] = 0.0;
        }
    if (clip > 0.0)
        rho = solver.eigenvectors() * lam.asDiagonal() *
              solver.eigenvectors().adjoint();
    const double tr = rho.trace().real();
    if (!(tr > 0.0)) throw NonPhysicalState("state trace collapsed to zero");
    rho /= tr;
    return clip;
}

void record_moments(const SegmentOps& ops, const Mat& eta,
                    std::vector<double>& n, std::vector<double>& nu) {
    n.resize(ops.r_plus_rdag.size());
    for (std::size_t j = 0; j < n.size(); ++j)
        n[j] = (ops.r_plus_rdag[j] * eta).trace().real();
    nu.resize(ops.jump_totals.size());
    for (std::size_t k = 0; k < nu.size(); ++k)
        nu[k] = (ops.jump_totals[k] * eta).trace().real();
}

} // namespace

MasterSolution solve_master(const MeasurementModel& model, const TimeGrid& grid) {
    const ModelOps ops(model);
    MasterSolution sol;
    sol.grid = grid;
    sol.eta.reserve(grid.n_steps + 1);
    sol.n.resize(grid.n_steps + 1);
    sol.nu.resize(grid.n_steps + 1);

    Mat eta = symmetrize(model.initial_state);
    eta /= eta.trace().real();
    double min_eig = 0.0;
    for (int step = 0; step <= grid.n_steps; ++step) {
        const double t = grid.time_of(step);
        const SegmentOps& seg = ops.at(std::min(t, model.t_max()));
        record_moments(seg, eta, sol.n[step], sol.nu[step]);
        sol.eta.push_back(eta);
        if (step == grid.n_steps) break;

        // classical RK4; piecewise-constant operators looked up per stage
        const double dt = grid.dt;
        const Mat k1 = liouvillian_apply(ops.at(t), eta);
        const Mat k2 = liouvillian_apply(ops.at(t + 0.5 * dt), eta + 0.5 * dt * k1);
        const Mat k3 = liouvillian_apply(ops.at(t + 0.5 * dt), eta + 0.5 * dt * k2);
        const Mat k4 =
            liouvillian_apply(ops.at(std::min(t + dt, model.t_max())),
                              eta + dt * k3);
        eta += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        const double clip = clip_and_normalize(eta, min_eig);
        sol.max_clip = std::max(sol.max_clip, clip);
        if (clip > 1e-6)
            throw NonPhysicalState("master solution left the state space");
    }
    return sol;
}

TrajectoryState make_initial_state(const MeasurementModel& model) {
    TrajectoryState st;
    st.rho = symmetrize(model.initial_state);
    st.rho /= st.rho.trace().real();
    st.W.assign(model.n_diffusive(), 0.0);
    st.N.assign(model.n_jump(), 0);
    st.m.assign(model.n_diffusive(), 0.0);
    st.mu.assign(model.n_jump(), 0.0);
    return st;
}

std::pair<double, double> accumulate_log_densities(
    const std::vector<double>& m, const std::vector<double>& mu,
    const std::vector<double>& n, const std::vector<double>& nu,
    const std::vector<double>& rates, const std::vector<double>& dW_Q,
    const std::vector<std::uint8_t>& jump_flags, double dt) {
    double dlp = 0.0, dlq = 0.0;
    for (std::size_t j = 0; j < m.size(); ++j) {
        dlp += m[j] * dW_Q[j] - 0.5 * m[j] * m[j] * dt;
        dlq += n[j] * dW_Q[j] - 0.5 * n[j] * n[j] * dt;
    }
    for (std::size_t k = 0; k < mu.size(); ++k) {
        const double mu_k = std::max(mu[k], intensity_floor);
        const double nu_k = std::max(nu[k], intensity_floor);
        if (jump_flags[k]) {
            dlp += std::log(mu_k / rates[k]);
            dlq += std::log(nu_k / rates[k]);
        }
        dlp += (rates[k] - mu[k]) * dt;
        dlq += (rates[k] - nu[k]) * dt;
    }
    return {dlp, dlq};
}

std::vector<double> jump_intensities(const SegmentOps& ops, const Mat& rho,
                                     UnravelingMode mode) {
    if (mode == UnravelingMode::linear) return ops.rates;
    std::vector<double> mu(ops.jump_totals.size());
    for (std::size_t k = 0; k < mu.size(); ++k)
        mu[k] = std::max(0.0, (ops.jump_totals[k] * rho).trace().real());
    return mu;
}

NoiseDraw draw_noise(const SegmentOps& ops, const Mat& rho, UnravelingMode mode,
                     double dt, RngStream& rng) {
    NoiseDraw draw;
    const double sqrt_dt = std::sqrt(dt);
    draw.dW.resize(ops.r_plus_rdag.size());
    for (double& dw : draw.dW) dw = sqrt_dt * rng.normal();
    const std::vector<double> mu = jump_intensities(ops, rho, mode);
    draw.jump_flags.resize(mu.size());
    for (std::size_t k = 0; k < mu.size(); ++k) {
        const double p = std::min(mu[k] * dt, 1.0);
        draw.jump_flags[k] = rng.uniform() < p ? 1 : 0;
    }
    return draw;
}

TrajectoryState step_nonlinear(const ModelOps& ops, const MasterSolution& master,
                               const TrajectoryState& state, const NoiseDraw& draw,
                               double dt) {
    const SegmentOps& seg = ops.at(state.t);
    TrajectoryState next = state;

    // left-limit conditional moments
    for (std::size_t j = 0; j < seg.r_plus_rdag.size(); ++j)
        next.m[j] = (seg.r_plus_rdag[j] * state.rho).trace().real();
    for (std::size_t k = 0; k < seg.jump_totals.size(); ++k) {
        next.mu[k] = (seg.jump_totals[k] * state.rho).trace().real();
        if (next.mu[k] * dt > 1.0)
            throw IntensityOverflow("mu_k * dt exceeds 1; decrease dt");
    }

    bool jumped = false;
    for (std::size_t k = 0; k < draw.jump_flags.size(); ++k) {
        if (!draw.jump_flags[k]) continue;
        Mat post = jump_map(seg.seg->jump_channels[k],
                            jumped ? next.rho : state.rho);
        const double tr = post.trace().real();
        if (!(tr > 0.0))
            throw NonPhysicalState("jump onto a zero-intensity channel");
        next.rho = post / tr;
        next.N[k] += 1;
        jumped = true;
    }
    if (!jumped) {
        Mat drho = liouvillian_apply(seg, state.rho) * dt;
        for (std::size_t k = 0; k < seg.jump_totals.size(); ++k) {
            drho -= jump_map(seg.seg->jump_channels[k], state.rho) * dt;
            drho += next.mu[k] * dt * state.rho;
        }
        for (std::size_t j = 0; j < seg.seg->diffusive_ops.size(); ++j) {
            const Mat& r = seg.seg->diffusive_ops[j];
            drho += draw.dW[j] * (r * state.rho + state.rho * r.adjoint() -
                                  next.m[j] * state.rho);
        }
        next.rho = state.rho + drho;
    }
    const double clip = clip_and_normalize(next.rho, next.min_eig_seen);
    next.max_clip = std::max(next.max_clip, clip);
    if (clip > step_clip_limit)
        throw NonPhysicalState("PSD clip above the trajectory step limit");

    // reconstruct the output process and the reference-measure increments
    std::vector<double> dW_Q(draw.dW.size());
    for (std::size_t j = 0; j < draw.dW.size(); ++j) {
        dW_Q[j] = draw.dW[j] + next.m[j] * dt;
        next.W[j] += dW_Q[j];
    }
    const auto [dlp, dlq] = accumulate_log_densities(
        next.m, next.mu, master.n[state.step], master.nu[state.step], seg.rates,
        dW_Q, draw.jump_flags, dt);
    next.log_p += dlp;
    next.log_q += dlq;
    next.step = state.step + 1;
    next.t = state.step * master.grid.dt + dt;
    return next;
}

TrajectoryState step_linear(const ModelOps& ops, const MasterSolution& master,
                            const TrajectoryState& state, const NoiseDraw& draw,
                            double dt) {
    const SegmentOps& seg = ops.at(state.t);
    TrajectoryState next = state;

    for (std::size_t j = 0; j < seg.r_plus_rdag.size(); ++j)
        next.m[j] = (seg.r_plus_rdag[j] * state.rho).trace().real();
    for (std::size_t k = 0; k < seg.jump_totals.size(); ++k)
        next.mu[k] = (seg.jump_totals[k] * state.rho).trace().real();

    // Euler-Maruyama increment of the linear equation, working on the
    // normalized state; the scale factor goes into log_p. A counting event
    // replaces the state by its jump image scaled by 1/lambda_k.
    Mat out;
    bool jumped = false;
    for (std::size_t k = 0; k < draw.jump_flags.size(); ++k) {
        if (!draw.jump_flags[k]) continue;
        // Reference-rate jumps can land where the jump image vanishes (a
        // path of zero physical density); flooring the source state keeps
        // the trace factor positive so the path continues with ln p pushed
        // down by roughly ln(floor / rate).
        const Mat source = floored_state(jumped ? out : state.rho,
                                         eig_floor_bound);
        out = jump_map(seg.seg->jump_channels[k], source) / seg.rates[k];
        next.N[k] += 1;
        jumped = true;
    }
    if (!jumped) {
        out = state.rho + liouvillian_apply(seg, state.rho) * dt;
        for (std::size_t k = 0; k < seg.jump_totals.size(); ++k) {
            const Mat jmap = jump_map(seg.seg->jump_channels[k], state.rho);
            out -= (jmap - seg.rates[k] * state.rho) * dt;
        }
        for (std::size_t j = 0; j < seg.seg->diffusive_ops.size(); ++j) {
            const Mat& r = seg.seg->diffusive_ops[j];
            out += draw.dW[j] * (r * state.rho + state.rho * r.adjoint());
        }
    }

    const double tr = out.trace().real();
    if (!(tr > 1e-300)) throw TraceCollapse("p_t collapsed to zero");
    next.log_p += std::log(tr);
    if (next.log_p < -690.0) throw TraceCollapse("ln p_t below underflow floor");
    next.rho = out / tr;
    const double clip = clip_and_normalize(next.rho, next.min_eig_seen);
    next.max_clip = std::max(next.max_clip, clip);
    if (clip > step_clip_limit)
        throw NonPhysicalState("PSD clip above the trajectory step limit");

    for (std::size_t j = 0; j < draw.dW.size(); ++j) next.W[j] += draw.dW[j];
    const auto [dlp, dlq] = accumulate_log_densities(
        next.m, next.mu, master.n[state.step], master.nu[state.step], seg.rates,
        draw.dW, draw.jump_flags, dt);
    (void)dlp; // ln p_t is tracked through the trace in linear mode
    next.log_q += dlq;
    next.step = state.step + 1;
    next.t = state.step * master.grid.dt + dt;
    return next;
}

std::vector<TrajectoryState> simulate_trajectory(
    const ModelOps& ops, const MasterSolution& master, const TimeGrid& grid,
    UnravelingMode mode, RngStream& rng, int snapshot_stride) {
    if (snapshot_stride < 1 || grid.n_steps % std::max(snapshot_stride, 1) != 0)
        throw std::invalid_argument("snapshot_stride must divide n_steps");
    TrajectoryState state = make_initial_state(*ops.model);
    {
        const SegmentOps& seg0 = ops.at(0.0);
        for (std::size_t j = 0; j < seg0.r_plus_rdag.size(); ++j)
            state.m[j] = (seg0.r_plus_rdag[j] * state.rho).trace().real();
        for (std::size_t k = 0; k < seg0.jump_totals.size(); ++k)
            state.mu[k] = (seg0.jump_totals[k] * state.rho).trace().real();
    }
    std::vector<TrajectoryState> snapshots;
    snapshots.reserve(grid.n_steps / snapshot_stride + 1);
    snapshots.push_back(state);
    for (int step = 0; step < grid.n_steps; ++step) {
        const SegmentOps& seg = ops.at(state.t);
        const NoiseDraw draw = draw_noise(seg, state.rho, mode, grid.dt, rng);
        state = mode == UnravelingMode::nonlinear
                    ? step_nonlinear(ops, master, state, draw, grid.dt)
                    : step_linear(ops, master, state, draw, grid.dt);
        if ((step + 1) % snapshot_stride == 0) snapshots.push_back(state);
    }
    return snapshots;
}

} // namespace qcm
