#pragma once

#include "warpski/types.hpp"

namespace warpski {

/// sqrt(mean((a - b)^2)).
double rmse(const Vector& a, const Vector& b);
/// rmse(a, b) / (max(b) - min(b)).
double nrmse(const Vector& a, const Vector& b);
/// 10 log10(||raw - truth||^2 / ||cleaned - truth||^2) in dB.
double snr_improvement(const Vector& raw, const Vector& cleaned, const Vector& truth);
/// ||a - b|| / ||b||.
double relative_error(const Vector& a, const Vector& b);

/// Text label written next to SNR numbers in reports.
inline constexpr const char* kSnrImprovementFormula =
    "10*log10(|raw-truth|^2/|cleaned-truth|^2)";

}  // namespace warpski
