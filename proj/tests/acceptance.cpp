// Acceptance suite: one pass/fail line per criterion, exit 0 only if all pass.
// Every tolerance is pinned here; none is tuned at run time.
#include "helpers.hpp"
#include "qcm/io.hpp"

#include <cstdio>
#include <string>
#include <vector>

using namespace qcm;
using namespace qcm::testing;

namespace {

int failures = 0;

void report(int id, const char* title, bool pass, const std::string& detail) {
    std::printf("%s  %2d  %s (%s)\n", pass ? "PASS" : "FAIL", id, title,
                detail.c_str());
    std::fflush(stdout);
    if (!pass) ++failures;
}

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.3g", v);
    return buf;
}

// Trapezoid of a per-step master-grid series over [0, t_max].
double trapezoid(const std::vector<std::vector<double>>& series,
                 std::size_t channel, double dt) {
    double acc = 0.0;
    for (std::size_t i = 1; i < series.size(); ++i)
        acc += 0.5 * (series[i][channel] + series[i - 1][channel]) * dt;
    return acc;
}

EstimateWithError sample_mean(const std::vector<double>& v) {
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    double var = 0.0;
    for (double x : v) var += (x - mean) * (x - mean);
    var /= static_cast<double>(v.size());
    return {mean, std::sqrt(var / static_cast<double>(v.size()))};
}

// ---- shared big runs -------------------------------------------------------

constexpr int big_n = 10000;
constexpr double big_dt = 1e-3;
constexpr double big_t = 1.0;
constexpr int big_stride = 25; // 41 stored times

EnsembleResult run_big(const MeasurementModel& model,
                       const MasterSolution& master, UnravelingMode mode,
                       std::uint64_t seed, int n_traj) {
    RunConfig config;
    config.grid = master.grid;
    config.n_traj = n_traj;
    config.master_seed = seed;
    config.mode = mode;
    config.snapshot_stride = big_stride;
    config.n_workers = 1;
    return run_ensemble(model, master, config);
}

// ---- criterion 1 -----------------------------------------------------------

void criterion_1_martingale(const MeasurementModel& model,
                            const MasterSolution& master) {
    const EnsembleResult run =
        run_big(model, master, UnravelingMode::linear, 1001, big_n);
    double worst = 0.0, worst_allowed = 0.0;
    bool pass = true;
    for (const EnsembleSnapshot& snap : run.snapshots) {
        if (snap.t == 0.0) continue;
        std::vector<double> p(snap.log_p.size());
        for (std::size_t i = 0; i < p.size(); ++i) p[i] = std::exp(snap.log_p[i]);
        const EstimateWithError mean = sample_mean(p);
        const double dev = std::abs(mean.value - 1.0);
        const double allowed = 4.0 * mean.stderr_value;
        if (dev > worst) {
            worst = dev;
            worst_allowed = allowed;
        }
        pass = pass && dev <= allowed;
    }
    report(1, "linear-mode record density has unit mean at every stored time",
           pass, "max |mean p - 1| = " + fmt(worst) + ", allowed " +
                     fmt(worst_allowed));
}

// ---- criteria 2, 3, 5, 6, 7, 8 over the shared nonlinear run ---------------

void criterion_2_mean_state(const EnsembleResult& run,
                            const MasterSolution& master) {
    const double allowed = 5.0 / std::sqrt(static_cast<double>(big_n)) +
                           10.0 * big_dt;
    double worst = 0.0;
    for (const EnsembleSnapshot& snap : run.snapshots) {
        const SnapshotStats stats = reduce_snapshot(snap);
        const std::size_t idx =
            static_cast<std::size_t>(std::llround(snap.t / big_dt));
        worst = std::max(worst, trace_distance(stats.mean_state,
                                               master.eta[idx]));
    }
    report(2, "ensemble mean state reconstructs the a priori state",
           worst <= allowed,
           "max trace distance = " + fmt(worst) + ", allowed " + fmt(allowed));
}

void criterion_3_output_moments(const EnsembleResult& run,
                                const MasterSolution& master) {
    const EnsembleSnapshot& last = run.snapshots.back();
    bool pass = true;
    std::string detail;
    for (std::size_t j = 0; j < last.W[0].size(); ++j) {
        std::vector<double> w(last.W.size());
        for (std::size_t i = 0; i < w.size(); ++i) w[i] = last.W[i][j];
        const EstimateWithError mean = sample_mean(w);
        const double target = trapezoid(master.n, j, big_dt);
        const double dev = std::abs(mean.value - target);
        pass = pass && dev <= 4.0 * mean.stderr_value;
        detail += "W dev " + fmt(dev) + "/" + fmt(4.0 * mean.stderr_value);
    }
    for (std::size_t k = 0; k < last.N[0].size(); ++k) {
        std::vector<double> counts(last.N.size());
        for (std::size_t i = 0; i < counts.size(); ++i)
            counts[i] = static_cast<double>(last.N[i][k]);
        const EstimateWithError mean = sample_mean(counts);
        const double target = trapezoid(master.nu, k, big_dt);
        const double dev = std::abs(mean.value - target);
        pass = pass && dev <= 4.0 * mean.stderr_value;
        detail += ", N dev " + fmt(dev) + "/" + fmt(4.0 * mean.stderr_value);
    }
    report(3, "output means match the integrated a priori moments", pass,
           detail);
}

void criterion_5_monotone(const InfoSeries& series) {
    bool pass = true;
    double worst_rate = 0.0;
    for (std::size_t i = 0; i < series.records.size(); ++i) {
        const InfoRecord& rec = series.records[i];
        pass = pass && rec.s_c_rate >= -3.0 * rec.s_c_rate_stderr;
        worst_rate = std::min(worst_rate, rec.s_c_rate);
        if (i > 0) {
            const InfoRecord& prev = series.records[i - 1];
            const double slack = 3.0 * 0.5 *
                                 (rec.s_c_rate_stderr + prev.s_c_rate_stderr) *
                                 (rec.t - prev.t);
            pass = pass && rec.s_c >= prev.s_c - slack;
        }
    }
    report(5, "classical information gain is nonnegative and nondecreasing",
           pass, "min rate = " + fmt(worst_rate));
}

void criterion_6_cross_validation(const InfoSeries& series) {
    const InfoRecord& last = series.records.back();
    const double dev = std::abs(last.s_c - last.pathwise_s_c);
    const double allowed =
        4.0 * (last.s_c_stderr + last.pathwise_s_c_stderr) + 10.0 * big_dt;
    report(6, "rate-integral and pathwise log-ratio estimators of S_c agree",
           dev <= allowed, "dev = " + fmt(dev) + ", allowed " + fmt(allowed));
}

void criterion_7_decomposition(const InfoSeries& series) {
    double worst = 0.0;
    for (const InfoRecord& rec : series.records)
        worst = std::max(worst,
                         std::abs(rec.s_total - (rec.s_quantum + rec.s_c)));
    report(7, "total mutual entropy decomposes as quantum plus classical",
           worst <= 1e-10, "max residual = " + fmt(worst));
}

void criterion_8_main_bound(const InfoSeries& series) {
    int tested = 0, passed = 0;
    double worst_excess = 0.0;
    for (const InfoRecord& rec : series.records) {
        if (rec.t == 0.0) continue;
        ++tested;
        const double slack = 3.0 * (rec.s_c_rate_stderr + rec.bound_rhs_stderr);
        const bool lower = rec.s_c_rate >= -3.0 * rec.s_c_rate_stderr;
        const bool upper = rec.s_c_rate <= rec.bound_rhs + slack;
        if (lower && upper) ++passed;
        worst_excess = std::max(worst_excess,
                                rec.s_c_rate - rec.bound_rhs - slack);
    }
    const bool pass = passed >= static_cast<int>(0.99 * tested + 0.999999);
    report(8, "information gain rate obeys its derivative upper bound", pass,
           std::to_string(passed) + "/" + std::to_string(tested) +
               " times, worst excess " + fmt(worst_excess));
}

// ---- criterion 4 -----------------------------------------------------------

void criterion_4_doleans() {
    // The identity is checked channel type by channel type: a diffusive-only
    // model and a counting-only model, so the per-step comparison is not
    // polluted by the O(sqrt(dt)) cross term of a jump and a Wiener increment
    // landing in the same Euler step.
    const Mat rho0 =
        0.5 * Mat::Identity(2, 2) + 0.15 * pauli_z() + 0.1 * pauli_x();
    JumpChannel counting;
    counting.kraus_ops = {std::sqrt(1.5) * sigma_minus()};
    counting.rate = 1.5;
    const MeasurementModel models[2] = {
        single_segment_model(2, rho0, 0.5 * pauli_z() + 0.3 * pauli_x(),
                             {0.35 * sigma_plus()}, {0.6 * sigma_minus()}, {},
                             0.2),
        single_segment_model(2, rho0, 0.5 * pauli_z() + 0.3 * pauli_x(),
                             {0.35 * sigma_plus()}, {}, {counting}, 0.2)};
    const double dt = 1e-4;
    double worst = 0.0;
    for (const MeasurementModel& model : models) {
        const TimeGrid grid = TimeGrid::make(0.2, dt);
        const MasterSolution master = solve_master(model, grid);
        const ModelOps ops(model);
        const auto& channels = model.segments[0].jump_channels;
        std::vector<double> rates;
        for (const JumpChannel& ch : channels) rates.push_back(ch.rate);
        for (int traj = 0; traj < 50; ++traj) {
            RngStream rng({4004, static_cast<std::uint64_t>(traj)});
            const auto path = simulate_trajectory(ops, master, grid,
                                                  UnravelingMode::linear, rng, 1);
            double formula = 0.0;
            for (std::size_t i = 1; i < path.size(); ++i) {
                std::vector<double> dW(path[i].W.size());
                for (std::size_t j = 0; j < dW.size(); ++j)
                    dW[j] = path[i].W[j] - path[i - 1].W[j];
                std::vector<std::uint8_t> flags(path[i].N.size());
                for (std::size_t k = 0; k < flags.size(); ++k)
                    flags[k] = static_cast<std::uint8_t>(path[i].N[k] -
                                                         path[i - 1].N[k]);
                const auto [dlp, dlq] = accumulate_log_densities(
                    path[i].m, path[i].mu, master.n[i - 1], master.nu[i - 1],
                    rates, dW, flags, dt);
                (void)dlq;
                formula += dlp;
                worst = std::max(worst, std::abs(std::exp(path[i].log_p) -
                                                 std::exp(formula)));
            }
        }
    }
    report(4, "trace of the unnormalized state equals its explicit exponential",
           worst <= 1e-3, "max per-path deviation = " + fmt(worst));
}

// ---- criterion 9 -----------------------------------------------------------

void criterion_9_equality_cases() {
    bool pass = true;
    std::string detail;
    struct Case {
        const char* name;
        MeasurementModel model;
        int n_traj;
    };
    RngStream init_rng({9009, 0});
    const Case cases[2] = {
        {"commuting", commuting_diagonal(1.0), 4000},
        {"non-informative", non_informative(random_density(2, init_rng), 1.0),
         2000}};
    for (const Case& c : cases) {
        const TimeGrid grid = TimeGrid::make(1.0, big_dt);
        const MasterSolution master = solve_master(c.model, grid);
        RunConfig config;
        config.grid = grid;
        config.n_traj = c.n_traj;
        config.master_seed = 9100;
        config.mode = UnravelingMode::nonlinear;
        config.snapshot_stride = 50; // 21 stored times
        config.n_workers = 1;
        const EnsembleResult run = run_ensemble(c.model, master, config);
        double worst = 0.0, worst_allowed = 0.0;
        for (const EnsembleSnapshot& snap : run.snapshots) {
            if (snap.t == 0.0) continue;
            const EstimateWithError gap =
                bound_gap(snap, master, c.model, snap.t);
            const double allowed = 3.0 * gap.stderr_value + 1e-6;
            if (std::abs(gap.value) > worst) {
                worst = std::abs(gap.value);
                worst_allowed = allowed;
            }
            pass = pass && std::abs(gap.value) <= allowed;
        }
        detail += std::string(c.name) + " max |gap| " + fmt(worst) + "/" +
                  fmt(worst_allowed) + "  ";
    }
    report(9, "equality cases have vanishing bound gap", pass, detail);
}

// ---- criterion 10 ----------------------------------------------------------

void criterion_10_non_informative() {
    bool pass = true;
    double worst = 0.0, worst_allowed = 0.0;
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        RngStream init_rng({7500 + seed, 0});
        const MeasurementModel model =
            non_informative(random_density(2, init_rng), 0.4);
        const TimeGrid grid = TimeGrid::make(0.4, big_dt);
        const MasterSolution master = solve_master(model, grid);
        RunConfig config;
        config.grid = grid;
        config.n_traj = 400;
        config.master_seed = 7600 + seed;
        config.mode = UnravelingMode::nonlinear;
        config.snapshot_stride = 100;
        config.n_workers = 1;
        const EnsembleResult run = run_ensemble(model, master, config);
        const InfoSeries series = compute_info_series(model, master, run, false);
        const InfoRecord& last = series.records.back();
        const double allowed = 3.0 * last.s_c_stderr + 1e-12;
        if (std::abs(last.s_c) > worst) {
            worst = std::abs(last.s_c);
            worst_allowed = allowed;
        }
        pass = pass && std::abs(last.s_c) <= allowed;
    }
    report(10, "non-informative channels extract zero classical information",
           pass,
           "max final S_c = " + fmt(worst) + ", allowed " + fmt(worst_allowed));
}

// ---- criterion 11 ----------------------------------------------------------

void criterion_11_pure_limit() {
    // fast decay: the a priori state is essentially pure at the horizon
    const MeasurementModel model = decay_qubit(8.0, 2.0);
    const TimeGrid grid = TimeGrid::make(2.0, big_dt);
    const MasterSolution master = solve_master(model, grid);
    RunConfig config;
    config.grid = grid;
    config.n_traj = 800;
    config.master_seed = 1111;
    config.mode = UnravelingMode::nonlinear;
    config.snapshot_stride = 2000;
    config.n_workers = 1;
    const EnsembleResult run = run_ensemble(model, master, config);
    const EstimateWithError qm = quantum_mutual(run.snapshots.back(), master);
    const double allowed = 3.0 * qm.stderr_value + 1e-4;
    report(11, "quantum mutual entropy vanishes as the a priori state purifies",
           std::abs(qm.value) <= allowed,
           "|value| = " + fmt(std::abs(qm.value)) + ", allowed " + fmt(allowed));
}

// ---- criterion 12 ----------------------------------------------------------

void criterion_12_resolvent() {
    RngStream rng({12012, 0});
    const ResolventForm forms[] = {ResolventForm::eta_a_eta_b,
                                   ResolventForm::a_eta_b_eta_sq,
                                   ResolventForm::plain};
    double worst = 0.0;
    for (int trial = 0; trial < 200; ++trial) {
        const int dim = 2 + static_cast<int>(rng.next_u64() % 3);
        const Mat a = random_hermitian(dim, rng);
        const Mat b = random_hermitian(dim, rng);
        const Mat eta = random_density(dim, rng);
        const ResolventForm form = forms[trial % 3];
        const double closed = resolvent_pair_integral(a, b, eta, form);
        const double quad = resolvent_integral_quadrature(a, b, eta, form);
        worst = std::max(worst, std::abs(closed - quad) /
                                    std::max(1.0, std::abs(quad)));
    }
    report(12, "closed-form resolvent integrals match adaptive quadrature",
           worst <= 1e-8, "max relative error = " + fmt(worst));
}

// ---- criterion 13 ----------------------------------------------------------

void criterion_13_analytic_derivative(const MeasurementModel& model,
                                      const MasterSolution& master) {
    bool pass = true;
    std::string detail;
    const double h = 0.04;
    const int substeps = 40; // inner dt = 1e-3
    for (const double t : {0.2, 0.5, 1.0}) {
        const std::size_t idx =
            static_cast<std::size_t>(std::llround(t / big_dt));
        const Mat eta_t = master.eta[idx];
        const double analytic = entropy_rate_functional(model, t, eta_t);

        // nested ensemble restarted from the deterministic state eta_t
        const ModelSegment& seg = model.segment_at(t);
        MeasurementModel probe = single_segment_model(
            model.dim, eta_t, seg.hamiltonian, seg.lindblad_ops,
            seg.diffusive_ops, seg.jump_channels, h);
        const TimeGrid grid = TimeGrid::make(h, h / substeps);
        const MasterSolution probe_master = solve_master(probe, grid);
        RunConfig config;
        config.grid = grid;
        config.n_traj = 40000;
        config.master_seed = 13000 + static_cast<std::uint64_t>(idx);
        config.mode = UnravelingMode::nonlinear;
        config.snapshot_stride = substeps / 2; // states at 0, h/2, h
        config.n_workers = 1;
        const EnsembleResult run = run_ensemble(probe, probe_master, config);
        const double s0 = von_neumann_entropy(eta_t);

        // per-trajectory Richardson estimate of dE[S]/du at u = t+
        std::vector<double> d(config.n_traj);
        const EnsembleSnapshot& half = run.snapshots[1];
        const EnsembleSnapshot& full = run.snapshots[2];
        for (int i = 0; i < config.n_traj; ++i)
            d[i] = (4.0 * von_neumann_entropy(half.states[i]) -
                    von_neumann_entropy(full.states[i]) - 3.0 * s0) /
                   h;
        const EstimateWithError fd = sample_mean(d);
        const double dev = std::abs(-fd.value - analytic);
        const double allowed = 5.0 * fd.stderr_value;
        pass = pass && dev <= allowed;
        detail += "t=" + fmt(t) + ": dev " + fmt(dev) + "/" + fmt(allowed) +
                  "  ";
    }
    report(13,
           "bound functional equals the finite-difference entropy derivative",
           pass, detail);
}

// ---- criterion 14 ----------------------------------------------------------

void criterion_14_monotonicity() {
    RngStream rng({14014, 0});
    double worst = 0.0;
    for (int trial = 0; trial < 500; ++trial) {
        const int dim = 2 + static_cast<int>(rng.next_u64() % 3);
        const Mat a = random_density(dim, rng);
        const Mat b = random_density(dim, rng);
        const auto kraus =
            random_kraus_set(dim, 2 + static_cast<int>(rng.next_u64() % 3), rng);
        const double before = quantum_relative_entropy(a, b);
        const double after = quantum_relative_entropy(apply_kraus(kraus, a),
                                                      apply_kraus(kraus, b));
        worst = std::max(worst, after - before);
    }
    report(14, "relative entropy is monotone under random channels",
           worst <= 1e-8, "max increase = " + fmt(worst));
}

// ---- criterion 15 ----------------------------------------------------------

void criterion_15_reproducibility() {
    const MeasurementModel model = generic_qubit(0.1);
    const TimeGrid grid = TimeGrid::make(0.1, big_dt);
    const MasterSolution master = solve_master(model, grid);
    std::vector<std::string> outputs;
    for (const int workers : {1, 4, 8}) {
        RunConfig config;
        config.grid = grid;
        config.n_traj = 200;
        config.master_seed = 15015;
        config.mode = UnravelingMode::nonlinear;
        config.snapshot_stride = 20;
        config.n_workers = workers;
        const EnsembleResult run = run_ensemble(model, master, config);
        const InfoSeries series = compute_info_series(model, master, run, true);
        outputs.push_back(info_csv(series, false));
    }
    const bool pass = outputs[0] == outputs[1] && outputs[0] == outputs[2];
    report(15, "identical seeds give byte-identical CSVs across worker counts",
           pass, pass ? "byte-identical" : "outputs differ");
}

} // namespace

int main() {
    const MeasurementModel model = generic_qubit(big_t);
    const TimeGrid grid = TimeGrid::make(big_t, big_dt);
    const MasterSolution master = solve_master(model, grid);

    criterion_1_martingale(model, master);
    {
        const EnsembleResult run =
            run_big(model, master, UnravelingMode::nonlinear, 2002, big_n);
        const InfoSeries series = compute_info_series(model, master, run, true);
        criterion_2_mean_state(run, master);
        criterion_3_output_moments(run, master);
        criterion_5_monotone(series);
        criterion_6_cross_validation(series);
        criterion_7_decomposition(series);
        criterion_8_main_bound(series);
    }
    criterion_4_doleans();
    criterion_9_equality_cases();
    criterion_10_non_informative();
    criterion_11_pure_limit();
    criterion_12_resolvent();
    criterion_13_analytic_derivative(model, master);
    criterion_14_monotonicity();
    criterion_15_reproducibility();

    if (failures == 0) {
        std::printf("all 15 acceptance criteria passed\n");
        return 0;
    }
    std::printf("%d acceptance criteria FAILED\n", failures);
    return 1;
}
