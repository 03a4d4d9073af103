#include "qcm/io.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <sstream>

namespace qcm {

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

namespace {

const double ln2 = std::log(2.0);

void append_row(std::string& out, const std::vector<double>& values) {
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (i) out += ',';
        out += format_double(values[i]);
    }
    out += '\n';
}

} // namespace

std::string info_csv(const InfoSeries& series, bool bits) {
    const double scale = bits ? 1.0 / ln2 : 1.0;
    std::string out =
        "t,S_c,S_c_stderr,dSc_dt,dSc_dt_stderr,S_quantum,S_quantum_stderr,"
        "S_total,bound_rhs,bound_rhs_stderr,gap,gap_stderr,S_vn_eta,"
        "goodness_ratio\n";
    for (const InfoRecord& r : series.records)
        append_row(out, {r.t, r.s_c * scale, r.s_c_stderr * scale,
                         r.s_c_rate * scale, r.s_c_rate_stderr * scale,
                         r.s_quantum * scale, r.s_quantum_stderr * scale,
                         r.s_total * scale, r.bound_rhs * scale,
                         r.bound_rhs_stderr * scale, r.gap * scale,
                         r.gap_stderr * scale, r.s_vn_eta * scale,
                         r.goodness_ratio});
    return out;
}

std::string bound_csv(const InfoSeries& series, bool bits) {
    const double scale = bits ? 1.0 / ln2 : 1.0;
    std::string out =
        "t,dSc_dt,dSc_dt_stderr,bound_rhs,bound_rhs_stderr,gap,gap_stderr\n";
    for (const InfoRecord& r : series.records)
        append_row(out, {r.t, r.s_c_rate * scale, r.s_c_rate_stderr * scale,
                         r.bound_rhs * scale, r.bound_rhs_stderr * scale,
                         r.gap * scale, r.gap_stderr * scale});
    return out;
}

std::string trajectory_csv(const std::vector<TrajectoryState>& path) {
    if (path.empty()) return "";
    const Eigen::Index dim = path[0].rho.rows();
    std::string out = "t";
    for (Eigen::Index i = 0; i < dim; ++i)
        for (Eigen::Index j = 0; j < dim; ++j) {
            out += ",rho_re_" + std::to_string(i) + "_" + std::to_string(j);
            out += ",rho_im_" + std::to_string(i) + "_" + std::to_string(j);
        }
    out += ",log_p,log_q";
    for (std::size_t j = 0; j < path[0].W.size(); ++j)
        out += ",W_" + std::to_string(j + 1);
    for (std::size_t k = 0; k < path[0].N.size(); ++k)
        out += ",N_" + std::to_string(k + 1);
    out += '\n';
    for (const TrajectoryState& st : path) {
        std::vector<double> row{st.t};
        for (Eigen::Index i = 0; i < dim; ++i)
            for (Eigen::Index j = 0; j < dim; ++j) {
                row.push_back(st.rho(i, j).real());
                row.push_back(st.rho(i, j).imag());
            }
        row.push_back(st.log_p);
        row.push_back(st.log_q);
        for (double w : st.W) row.push_back(w);
        for (long n : st.N) row.push_back(static_cast<double>(n));
        append_row(out, row);
    }
    return out;
}

std::string summary_json(const InfoSeries& series, const RunConfig& config,
                         bool bits) {
    const double scale = bits ? 1.0 / ln2 : 1.0;
    const InfoRecord& last = series.records.back();
    const GoodnessIndexes goodness = goodness_indexes(series.records);
    nlohmann::json j;
    j["final_S_c"] = last.s_c * scale;
    j["final_S_c_stderr"] = last.s_c_stderr * scale;
    j["final_S_quantum"] = last.s_quantum * scale;
    j["final_S_total"] = last.s_total * scale;
    j["cumulative_goodness"] = goodness.cumulative;
    j["units"] = bits ? "bits" : "nats";
    j["seed"] = config.master_seed;
    j["n_traj"] = config.n_traj;
    j["dt"] = config.grid.dt;
    j["t_max"] = config.grid.t_max;
    j["mode"] =
        config.mode == UnravelingMode::linear ? "linear" : "nonlinear";
    return j.dump(2) + "\n";
}

} // namespace qcm
