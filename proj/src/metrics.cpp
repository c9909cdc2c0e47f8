#include "warpski/metrics.hpp"

#include <cmath>
#include <string>

#include "warpski/error.hpp"

namespace warpski {

namespace {

void same_length(const Vector& a, const Vector& b, const char* what) {
  if (a.size() != b.size()) {
    throw DimensionError(std::string(what) + ": lengths " + std::to_string(a.size()) + " and " +
                         std::to_string(b.size()) + " differ");
  }
  if (a.size() == 0) throw DimensionError(std::string(what) + ": empty input");
}

}  // namespace

double rmse(const Vector& a, const Vector& b) {
  same_length(a, b, "rmse");
  return std::sqrt((a - b).squaredNorm() / static_cast<double>(a.size()));
}

double nrmse(const Vector& a, const Vector& b) {
  same_length(a, b, "nrmse");
  const double range = b.maxCoeff() - b.minCoeff();
  if (!(range > 0.0)) throw DomainError("nrmse: reference has zero range");
  return rmse(a, b) / range;
}

double snr_improvement(const Vector& raw, const Vector& cleaned, const Vector& truth) {
  same_length(raw, truth, "snr_improvement");
  same_length(cleaned, truth, "snr_improvement");
  const double before = (raw - truth).squaredNorm();
  const double after = (cleaned - truth).squaredNorm();
  if (!(after > 0.0)) throw DomainError("snr_improvement: cleaned signal equals the truth");
  if (!(before > 0.0)) throw DomainError("snr_improvement: raw signal equals the truth");
  return 10.0 * std::log10(before / after);
}

double relative_error(const Vector& a, const Vector& b) {
  same_length(a, b, "relative_error");
  const double nb = b.norm();
  if (!(nb > 0.0)) throw DomainError("relative_error: reference is zero");
  return (a - b).norm() / nb;
}

}  // namespace warpski
