#pragma once

#include "qcm/information.hpp"

#include <string>

// CSV and summary-JSON emission. Numbers are printed with 17 significant
// digits so every double round-trips exactly; headers are stable across runs.
namespace qcm {

std::string format_double(double v);

/// Info CSV. With bits=true every entropy column is divided by ln 2
/// (the dimensionless goodness ratio and t are untouched).
std::string info_csv(const InfoSeries& series, bool bits);

/// Bound CSV: t, rate, bound and gap with standard errors.
std::string bound_csv(const InfoSeries& series, bool bits);

/// Snapshot dump of one trajectory path.
std::string trajectory_csv(const std::vector<TrajectoryState>& path);

/// Run summary as JSON text.
std::string summary_json(const InfoSeries& series, const RunConfig& config,
                         bool bits);

} // namespace qcm
