#pragma once

#include <cstdint>
#include <limits>
#include <span>
#include <string>

namespace odtte {

// All relative metrics are fractions internally; the x100 percent scaling
// happens only at the presentation layer.
struct MetricsReport {
    double mse = 0;
    double rmse = 0;
    double mae = 0;
    double mape = 0;
    double mare = 0;
    double ew = std::numeric_limits<double>::quiet_NaN(); // at coverage ew_p
    double ew_p = 0.90;
    std::int64_t n = 0;
};

MetricsReport compute_metrics(std::span<const double> targets, std::span<const double> predictions);

// Smallest +-window (in hours) covering at least fraction p of the absolute
// errors: the ceil(p*N)-th smallest |y - f|.
double error_window(std::span<const double> targets, std::span<const double> predictions, double p);

struct TTestResult {
    double t = 0;
    double p = 1;
    bool degenerate = false; // zero-variance differences
};

// Two-sided paired t-test on per-sample values (typically absolute errors).
TTestResult paired_ttest(std::span<const double> a, std::span<const double> b);

// Regularized incomplete beta, exposed for the t CDF and its tests.
double reg_incomplete_beta(double a, double b, double x);

std::string report_to_text(const MetricsReport& r);

} // namespace odtte
