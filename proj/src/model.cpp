#include "qcm/model.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <sstream>

namespace qcm {

using nlohmann::json;

Mat JumpChannel::total_op() const {
    if (kraus_ops.empty()) return Mat();
    Mat j = Mat::Zero(kraus_ops[0].rows(), kraus_ops[0].cols());
    for (const Mat& v : kraus_ops) j += v.adjoint() * v;
    return j;
}

std::size_t MeasurementModel::n_diffusive() const {
    return segments.empty() ? 0 : segments[0].diffusive_ops.size();
}

std::size_t MeasurementModel::n_jump() const {
    return segments.empty() ? 0 : segments[0].jump_channels.size();
}

const ModelSegment& MeasurementModel::segment_at(double t) const {
    if (segments.empty()) throw OutOfHorizon("model has no segments");
    for (const ModelSegment& seg : segments)
        if (t >= seg.t_start && t < seg.t_end) return seg;
    const ModelSegment& last = segments.back();
    if (t == last.t_end) return last;
    std::ostringstream msg;
    msg << "time " << t << " outside the model horizon [0, " << t_max() << "]";
    throw OutOfHorizon(msg.str());
}

Mat jump_map(const JumpChannel& channel, const Mat& rho) {
    Mat out = Mat::Zero(rho.rows(), rho.cols());
    for (const Mat& v : channel.kraus_ops) {
        if (v.rows() != rho.rows())
            throw DimMismatch("jump_map: Kraus operator dimension mismatch");
        out.noalias() += v * rho * v.adjoint();
    }
    return out;
}

namespace {

// A rho A_dag - (1/2){A_dag A, rho}
void add_dissipator(Mat& out, const Mat& a, const Mat& rho) {
    const Mat ada = a.adjoint() * a;
    out.noalias() += a * rho * a.adjoint();
    out.noalias() -= 0.5 * (ada * rho + rho * ada);
}

} // namespace

Mat liouvillian_apply(const ModelSegment& seg, const Mat& rho) {
    const Complex im(0.0, 1.0);
    Mat out = -im * (seg.hamiltonian * rho - rho * seg.hamiltonian);
    for (const Mat& l : seg.lindblad_ops) add_dissipator(out, l, rho);
    for (const Mat& r : seg.diffusive_ops) add_dissipator(out, r, rho);
    for (const JumpChannel& ch : seg.jump_channels) {
        const Mat j = ch.total_op();
        out += jump_map(ch, rho);
        out.noalias() -= 0.5 * (j * rho + rho * j);
    }
    return out;
}

Mat liouvillian_apply(const MeasurementModel& model, double t, const Mat& rho) {
    return liouvillian_apply(model.segment_at(t), rho);
}

namespace {

void check_op(std::vector<Diagnostic>& diags, const Mat& op, int dim,
              const std::string& loc) {
    if (op.rows() != dim || op.cols() != dim)
        diags.push_back({"DimMismatch", loc});
    else if (!op.allFinite())
        diags.push_back({"NonFinite", loc});
}

} // namespace

std::vector<Diagnostic> validate(const MeasurementModel& model) {
    std::vector<Diagnostic> diags;
    if (model.dim < 1) {
        diags.push_back({"BadDimension", "dim"});
        return diags;
    }
    check_op(diags, model.initial_state, model.dim, "initial_state");
    if (model.initial_state.rows() == model.dim) {
        if (herm_defect(model.initial_state) > tol_herm)
            diags.push_back({"NotHermitian", "initial_state"});
        else {
            const EigenSystem es = eigh(model.initial_state);
            if (es.eigenvalues[0] < -tol_psd)
                diags.push_back({"NotPositive", "initial_state"});
            if (std::abs(model.initial_state.trace().real() - 1.0) > tol_trace)
                diags.push_back({"NotNormalized", "initial_state"});
        }
    }
    if (model.segments.empty()) {
        diags.push_back({"EmptySchedule", "segments"});
        return diags;
    }
    if (model.segments[0].t_start != 0.0)
        diags.push_back({"ScheduleGap", "segments[0].t_start"});
    double prev_end = 0.0;
    for (std::size_t i = 0; i < model.segments.size(); ++i) {
        const ModelSegment& seg = model.segments[i];
        const std::string base = "segments[" + std::to_string(i) + "]";
        if (i > 0 && seg.t_start != prev_end)
            diags.push_back({"ScheduleGap", base + ".t_start"});
        if (!(seg.t_start < seg.t_end))
            diags.push_back({"EmptySegment", base});
        prev_end = seg.t_end;
        check_op(diags, seg.hamiltonian, model.dim, base + ".hamiltonian");
        if (seg.hamiltonian.rows() == model.dim &&
            herm_defect(seg.hamiltonian) > tol_herm)
            diags.push_back({"NotHermitian", base + ".hamiltonian"});
        for (std::size_t l = 0; l < seg.lindblad_ops.size(); ++l)
            check_op(diags, seg.lindblad_ops[l], model.dim,
                     base + ".lindblad_ops[" + std::to_string(l) + "]");
        for (std::size_t j = 0; j < seg.diffusive_ops.size(); ++j)
            check_op(diags, seg.diffusive_ops[j], model.dim,
                     base + ".diffusive_ops[" + std::to_string(j) + "]");
        for (std::size_t k = 0; k < seg.jump_channels.size(); ++k) {
            const JumpChannel& ch = seg.jump_channels[k];
            const std::string kbase =
                base + ".jump_channels[" + std::to_string(k) + "]";
            if (!(ch.rate > 0.0)) diags.push_back({"BadRate", kbase + ".rate"});
            if (ch.kraus_ops.empty())
                diags.push_back({"EmptyKrausSet", kbase + ".kraus_ops"});
            for (std::size_t r = 0; r < ch.kraus_ops.size(); ++r)
                check_op(diags, ch.kraus_ops[r], model.dim,
                         kbase + ".kraus_ops[" + std::to_string(r) + "]");
        }
        // channel counts must be constant across segments so that trajectory
        // records keep a fixed shape
        if (seg.diffusive_ops.size() != model.segments[0].diffusive_ops.size())
            diags.push_back({"ChannelCountChange", base + ".diffusive_ops"});
        if (seg.jump_channels.size() != model.segments[0].jump_channels.size())
            diags.push_back({"ChannelCountChange", base + ".jump_channels"});
    }
    return diags;
}

namespace {

json matrix_to_json(const Mat& m) {
    json rows = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j)
            row.push_back({m(i, j).real(), m(i, j).imag()});
        rows.push_back(std::move(row));
    }
    return rows;
}

Mat matrix_from_json(const json& j) {
    if (!j.is_array() || j.empty())
        throw ModelParseError("matrix must be a non-empty array of rows");
    const std::size_t n = j.size();
    Mat m(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        if (!j[i].is_array() || j[i].size() != n)
            throw ModelParseError("matrix rows must be square");
        for (std::size_t k = 0; k < n; ++k) {
            const json& e = j[i][k];
            if (!e.is_array() || e.size() != 2)
                throw ModelParseError("matrix entries must be [re, im] pairs");
            m(i, k) = Complex(e[0].get<double>(), e[1].get<double>());
        }
    }
    return m;
}

std::vector<Mat> matrices_from_json(const json& j) {
    std::vector<Mat> out;
    for (const json& e : j) out.push_back(matrix_from_json(e));
    return out;
}

} // namespace

MeasurementModel model_from_json_string(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ModelParseError(e.what());
    }
    try {
        MeasurementModel model;
        model.dim = j.at("dim").get<int>();
        model.initial_state = matrix_from_json(j.at("initial_state"));
        for (const json& sj : j.at("segments")) {
            ModelSegment seg;
            seg.t_start = sj.at("t_start").get<double>();
            seg.t_end = sj.at("t_end").get<double>();
            seg.hamiltonian = matrix_from_json(sj.at("hamiltonian"));
            if (sj.contains("lindblad_ops"))
                seg.lindblad_ops = matrices_from_json(sj["lindblad_ops"]);
            if (sj.contains("diffusive_ops"))
                seg.diffusive_ops = matrices_from_json(sj["diffusive_ops"]);
            if (sj.contains("jump_channels")) {
                for (const json& cj : sj["jump_channels"]) {
                    JumpChannel ch;
                    ch.kraus_ops = matrices_from_json(cj.at("kraus_ops"));
                    ch.rate = cj.at("rate").get<double>();
                    seg.jump_channels.push_back(std::move(ch));
                }
            }
            model.segments.push_back(std::move(seg));
        }
        return model;
    } catch (const json::exception& e) {
        throw ModelParseError(e.what());
    }
}

MeasurementModel model_from_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ModelParseError("cannot open model file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return model_from_json_string(buf.str());
}

std::string model_to_json_string(const MeasurementModel& model) {
    json j;
    j["dim"] = model.dim;
    j["initial_state"] = matrix_to_json(model.initial_state);
    json segs = json::array();
    for (const ModelSegment& seg : model.segments) {
        json sj;
        sj["t_start"] = seg.t_start;
        sj["t_end"] = seg.t_end;
        sj["hamiltonian"] = matrix_to_json(seg.hamiltonian);
        sj["lindblad_ops"] = json::array();
        for (const Mat& l : seg.lindblad_ops)
            sj["lindblad_ops"].push_back(matrix_to_json(l));
        sj["diffusive_ops"] = json::array();
        for (const Mat& r : seg.diffusive_ops)
            sj["diffusive_ops"].push_back(matrix_to_json(r));
        sj["jump_channels"] = json::array();
        for (const JumpChannel& ch : seg.jump_channels) {
            json cj;
            cj["kraus_ops"] = json::array();
            for (const Mat& v : ch.kraus_ops)
                cj["kraus_ops"].push_back(matrix_to_json(v));
            cj["rate"] = ch.rate;
            sj["jump_channels"].push_back(std::move(cj));
        }
        segs.push_back(std::move(sj));
    }
    j["segments"] = std::move(segs);
    return j.dump(2);
}

} // namespace qcm
