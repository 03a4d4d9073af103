#pragma once

#include "qcm/operators.hpp"

#include <string>
#include <vector>

// Measurement model: the operator coefficients of the simulated SDEs over a
// piecewise-constant time schedule, with validation and JSON (de)serialization.
namespace qcm {

struct OutOfHorizon : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct ModelParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// One counting channel: Kraus operators V^r and the reference Poisson
/// rate lambda of the driving counter.
struct JumpChannel {
    std::vector<Mat> kraus_ops;
    double rate = 1.0;

    /// J = sum_r V^r_dag V^r (Hermitian PSD by construction).
    Mat total_op() const;
};

/// Operators in force on the half-open interval [t_start, t_end).
struct ModelSegment {
    Mat hamiltonian;
    std::vector<Mat> lindblad_ops;   // unmonitored dissipation
    std::vector<Mat> diffusive_ops;  // monitored, continuous output
    std::vector<JumpChannel> jump_channels;
    double t_start = 0.0;
    double t_end = 0.0;
};

struct Diagnostic {
    std::string code;     // e.g. NotHermitian
    std::string location; // e.g. segments[0].hamiltonian
};

struct MeasurementModel {
    int dim = 0;
    std::vector<ModelSegment> segments; // contiguous, covering [0, t_max]
    Mat initial_state;

    double t_max() const { return segments.empty() ? 0.0 : segments.back().t_end; }
    std::size_t n_diffusive() const;
    std::size_t n_jump() const;

    /// Segment in force at time t (operators constant on [t_start, t_end);
    /// the final segment also covers its right endpoint).
    const ModelSegment& segment_at(double t) const;
};

/// sum_r V rho V_dag; completely positive by construction.
Mat jump_map(const JumpChannel& channel, const Mat& rho);

/// Full Liouvillian: -i[H, rho] + dissipators of the L, R and jump channels.
/// Trace-free on any input.
Mat liouvillian_apply(const MeasurementModel& model, double t, const Mat& rho);
Mat liouvillian_apply(const ModelSegment& seg, const Mat& rho);

/// All invariant violations as diagnostics; empty means well-formed.
std::vector<Diagnostic> validate(const MeasurementModel& model);

/// JSON round-trip of the model file format.
MeasurementModel model_from_json_string(const std::string& text);
MeasurementModel model_from_json_file(const std::string& path);
std::string model_to_json_string(const MeasurementModel& model);

} // namespace qcm
