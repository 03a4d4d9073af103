#include "qcm/information.hpp"

#include <cmath>
#include <limits>

namespace qcm {

namespace {

std::size_t master_index(const MasterSolution& master, double t) {
    const auto idx = static_cast<std::size_t>(std::llround(t / master.grid.dt));
    if (idx >= master.eta.size())
        throw OutOfHorizon("snapshot time outside master solution");
    return idx;
}

EstimateWithError mean_with_stderr(const std::vector<double>& samples) {
    const double n = static_cast<double>(samples.size());
    double mean = 0.0;
    for (double v : samples) mean += v;
    mean /= n;
    double var = 0.0;
    for (double v : samples) var += (v - mean) * (v - mean);
    var /= n;
    return {mean, std::sqrt(var / n)};
}

// Tr{X ln X} for PSD X; eigenvalues at or below the entropy floor contribute 0.
double tr_x_ln_x(const Mat& x) {
    const EigenSystem es = eigh(x);
    double s = 0.0;
    for (Eigen::Index i = 0; i < es.eigenvalues.size(); ++i) {
        const double lam = es.eigenvalues[i];
        if (lam > eig_floor) s += lam * std::log(lam);
    }
    return s;
}

// Tr{A s [A^dag, ln s]}
double commutator_term(const Mat& a, const Mat& s, const Mat& ln_s) {
    const Mat comm = a.adjoint() * ln_s - ln_s * a.adjoint();
    return (a * s * comm).trace().real();
}

// Weights of the closed-form u-integrals in the eigenbasis of the state.
double weight_eta(double li, double lj) {
    const double diff = lj - li;
    if (std::abs(diff) <= 1e-14 * std::max(li, lj)) return lj;
    return li * lj * std::log1p(diff / li) / diff;
}
double weight_eta_sq(double li, double lj) {
    const double diff = lj - li;
    if (std::abs(diff) <= 1e-14 * std::max(li, lj)) return lj;
    return lj * lj * std::log1p(diff / li) / diff;
}

// Sum of the three resolvent integrals appearing per diffusive channel.
double resolvent_sum(const Mat& r, const EigenSystem& es) {
    const Mat rt = es.eigenvectors.adjoint() * r * es.eigenvectors;
    const Eigen::Index n = es.eigenvalues.size();
    double acc = 0.0;
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j) {
            const double li = es.eigenvalues[i];
            const double lj = es.eigenvalues[j];
            acc += 2.0 * (rt(i, j) * rt(j, i)).real() * weight_eta(li, lj);
            acc += 2.0 * std::norm(rt(i, j)) * weight_eta_sq(li, lj);
        }
    return acc;
}

struct BoundContext {
    const ModelSegment* seg = nullptr;
    std::vector<Mat> jump_totals;
};

BoundContext make_bound_context(const MeasurementModel& model, double t) {
    BoundContext ctx;
    ctx.seg = &model.segment_at(t);
    for (const JumpChannel& ch : ctx.seg->jump_channels)
        ctx.jump_totals.push_back(ch.total_op());
    return ctx;
}

double functional_value(const BoundContext& ctx, const Mat& state) {
    const Mat s = floored_state(state, eig_floor_bound);
    const EigenSystem es = eigh(s);
    const Mat ln_s = log_from_eigensystem(es, eig_floor_bound);
    double val = 0.0;
    for (std::size_t k = 0; k < ctx.seg->jump_channels.size(); ++k) {
        const Mat js = jump_map(ctx.seg->jump_channels[k], s);
        const double ik = js.trace().real();
        val += tr_x_ln_x(js) - ik * std::log(std::max(ik, intensity_floor));
        val -= (ctx.jump_totals[k] * s * ln_s).trace().real();
    }
    for (const Mat& r : ctx.seg->diffusive_ops) val += commutator_term(r, s, ln_s);
    for (const Mat& l : ctx.seg->lindblad_ops) val += commutator_term(l, s, ln_s);
    for (const Mat& r : ctx.seg->diffusive_ops) {
        const double mj = ((r + r.adjoint()) * s).trace().real();
        val += 0.5 * (resolvent_sum(r, es) - mj * mj);
    }
    return val;
}

} // namespace

EstimateWithError info_gain_rate(const EnsembleSnapshot& snap,
                                 const MasterSolution& master) {
    const std::size_t n = snap.states.size();
    if (n == 0) throw EmptyEnsemble("info_gain_rate: empty snapshot");
    const std::size_t idx = master_index(master, snap.t);
    const std::vector<double>& nu = master.nu[idx];

    const std::size_t nj = snap.m_samples[0].size();
    std::vector<double> mean_m(nj, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < nj; ++j) mean_m[j] += snap.m_samples[i][j];
    for (double& v : mean_m) v /= static_cast<double>(n);

    // per-trajectory influence values: the estimator is their plain mean
    std::vector<double> influence(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        double h = 0.0;
        for (std::size_t j = 0; j < nj; ++j) {
            const double d = snap.m_samples[i][j] - mean_m[j];
            h += 0.5 * d * d;
        }
        for (std::size_t k = 0; k < nu.size(); ++k) {
            const double mu = snap.mu_samples[i][k];
            if (mu <= intensity_floor) continue;
            if (nu[k] <= intensity_floor)
                throw IntensityMismatch(
                    "physical intensity exceeds a vanishing a priori intensity");
            h += mu * std::log(mu / nu[k]);
        }
        influence[i] = h;
    }
    return mean_with_stderr(influence);
}

double classical_info_gain(const std::vector<InfoRecord>& records,
                           std::size_t up_to) {
    double acc = 0.0;
    for (std::size_t i = 1; i <= up_to && i < records.size(); ++i)
        acc += 0.5 * (records[i].s_c_rate + records[i - 1].s_c_rate) *
               (records[i].t - records[i - 1].t);
    return acc;
}

EstimateWithError quantum_mutual(const EnsembleSnapshot& snap,
                                 const MasterSolution& master) {
    const std::size_t n = snap.states.size();
    if (n == 0) throw EmptyEnsemble("quantum_mutual: empty snapshot");
    const std::size_t idx = master_index(master, snap.t);
    const double s_eta = von_neumann_entropy(master.eta[idx]);
    std::vector<double> entropies(n);
    for (std::size_t i = 0; i < n; ++i)
        entropies[i] = von_neumann_entropy(snap.states[i]);
    const EstimateWithError mean_s = mean_with_stderr(entropies);
    return {s_eta - mean_s.value, mean_s.stderr_value};
}

GoodnessIndexes goodness_indexes(const std::vector<InfoRecord>& records) {
    GoodnessIndexes out;
    const double nan = std::numeric_limits<double>::quiet_NaN();
    out.instantaneous.reserve(records.size());
    for (const InfoRecord& rec : records)
        out.instantaneous.push_back(
            rec.s_vn_eta > index_floor ? rec.s_quantum / rec.s_vn_eta : nan);
    for (std::size_t i = 1; i < records.size(); ++i) {
        const double a = out.instantaneous[i - 1];
        const double b = out.instantaneous[i];
        if (std::isnan(a) || std::isnan(b)) continue;
        out.cumulative += 0.5 * (a + b) * (records[i].t - records[i - 1].t);
    }
    return out;
}

double entropy_rate_functional(const MeasurementModel& model, double t,
                               const Mat& state) {
    return functional_value(make_bound_context(model, t), state);
}

EstimateWithError bound_rhs(const EnsembleSnapshot& snap,
                            const MasterSolution& master,
                            const MeasurementModel& model, double t) {
    const std::size_t n = snap.states.size();
    if (n == 0) throw EmptyEnsemble("bound_rhs: empty snapshot");
    const BoundContext ctx = make_bound_context(model, t);
    const double eta_term =
        functional_value(ctx, master.eta[master_index(master, t)]);
    std::vector<double> samples(n);
    for (std::size_t i = 0; i < n; ++i)
        samples[i] = functional_value(ctx, snap.states[i]);
    const EstimateWithError mean_f = mean_with_stderr(samples);
    return {eta_term - mean_f.value, mean_f.stderr_value};
}

EstimateWithError bound_gap(const EnsembleSnapshot& snap,
                            const MasterSolution& master,
                            const MeasurementModel& model, double t) {
    const std::size_t n = snap.states.size();
    if (n == 0) throw EmptyEnsemble("bound_gap: empty snapshot");
    const BoundContext ctx = make_bound_context(model, t);
    const ModelSegment& seg = *ctx.seg;

    // a priori quantities shared by every sample
    const Mat eta = floored_state(master.eta[master_index(master, t)],
                                  eig_floor_bound);
    const EigenSystem es_eta = eigh(eta);
    const Mat ln_eta = log_from_eigensystem(es_eta, eig_floor_bound);
    std::vector<Mat> ln_j_eta;
    for (const JumpChannel& ch : seg.jump_channels)
        ln_j_eta.push_back(
            log_from_eigensystem(eigh(jump_map(ch, eta)), eig_floor_bound));
    std::vector<double> comm_eta_r, comm_eta_l, resolvent_eta;
    for (const Mat& r : seg.diffusive_ops) {
        comm_eta_r.push_back(commutator_term(r, eta, ln_eta));
        resolvent_eta.push_back(resolvent_sum(r, es_eta));
    }
    for (const Mat& l : seg.lindblad_ops)
        comm_eta_l.push_back(commutator_term(l, eta, ln_eta));

    std::vector<double> samples(n);
    for (std::size_t i = 0; i < n; ++i) {
        const Mat s = floored_state(snap.states[i], eig_floor_bound);
        const EigenSystem es = eigh(s);
        const Mat ln_s = log_from_eigensystem(es, eig_floor_bound);
        double g = 0.0;
        for (std::size_t k = 0; k < seg.jump_channels.size(); ++k) {
            const Mat js = jump_map(seg.jump_channels[k], s);
            g += (ctx.jump_totals[k] * s * (ln_s - ln_eta)).trace().real();
            g -= tr_x_ln_x(js) - (js * ln_j_eta[k]).trace().real();
        }
        for (std::size_t j = 0; j < seg.diffusive_ops.size(); ++j) {
            const Mat& r = seg.diffusive_ops[j];
            g += comm_eta_r[j] - commutator_term(r, s, ln_s);
            g += 0.5 * (resolvent_eta[j] - resolvent_sum(r, es));
        }
        for (std::size_t l = 0; l < seg.lindblad_ops.size(); ++l)
            g += comm_eta_l[l] - commutator_term(seg.lindblad_ops[l], s, ln_s);
        samples[i] = g;
    }
    return mean_with_stderr(samples);
}

InfoSeries compute_info_series(const MeasurementModel& model,
                               const MasterSolution& master,
                               const EnsembleResult& ensemble, bool with_bound) {
    InfoSeries series;
    series.records.reserve(ensemble.snapshots.size());
    for (const EnsembleSnapshot& snap : ensemble.snapshots) {
        InfoRecord rec;
        rec.t = snap.t;

        const EstimateWithError rate = info_gain_rate(snap, master);
        rec.s_c_rate = rate.value;
        rec.s_c_rate_stderr = rate.stderr_value;

        const EstimateWithError qm = quantum_mutual(snap, master);
        rec.s_quantum = qm.value;
        rec.s_quantum_stderr = qm.stderr_value;
        rec.s_vn_eta = von_neumann_entropy(master.eta[master_index(master, snap.t)]);

        std::vector<double> log_ratio(snap.log_p.size());
        for (std::size_t i = 0; i < log_ratio.size(); ++i)
            log_ratio[i] = snap.log_p[i] - snap.log_q[i];
        const EstimateWithError pathwise = mean_with_stderr(log_ratio);
        rec.pathwise_s_c = pathwise.value;
        rec.pathwise_s_c_stderr = pathwise.stderr_value;

        if (!series.records.empty()) {
            const InfoRecord& prev = series.records.back();
            const double h = rec.t - prev.t;
            rec.s_c = prev.s_c + 0.5 * (prev.s_c_rate + rec.s_c_rate) * h;
            rec.s_c_stderr =
                prev.s_c_stderr +
                0.5 * (prev.s_c_rate_stderr + rec.s_c_rate_stderr) * h;
        }
        rec.s_total = rec.s_quantum + rec.s_c;

        if (with_bound) {
            const EstimateWithError rhs = bound_rhs(snap, master, model, snap.t);
            rec.bound_rhs = rhs.value;
            rec.bound_rhs_stderr = rhs.stderr_value;
            const EstimateWithError gap = bound_gap(snap, master, model, snap.t);
            rec.gap = gap.value;
            rec.gap_stderr = gap.stderr_value;
        }

        rec.goodness_ratio = rec.s_vn_eta > index_floor
                                 ? rec.s_quantum / rec.s_vn_eta
                                 : std::numeric_limits<double>::quiet_NaN();
        series.records.push_back(std::move(rec));
    }
    return series;
}

} // namespace qcm
