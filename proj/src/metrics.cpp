#include "odtte/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <vector>

#include "odtte/errors.hpp"
#include "odtte/util.hpp"

namespace odtte {

static void check_paired(std::span<const double> a, std::span<const double> b, const char* who) {
    if (a.size() != b.size())
        throw ContractError(std::string(who) + ": length mismatch " + std::to_string(a.size()) +
                            " vs " + std::to_string(b.size()));
    if (a.empty())
        throw ContractError(std::string(who) + ": empty input");
}

MetricsReport compute_metrics(std::span<const double> targets,
                              std::span<const double> predictions) {
    check_paired(targets, predictions, "compute_metrics");
    const size_t n = targets.size();

    double se = 0, ae = 0, ape = 0, abs_t = 0;
    for (size_t i = 0; i < n; ++i) {
        const double y = targets[i];
        if (y <= 0.0)
            throw DomainError("compute_metrics: MAPE requires targets > 0, got " + fmt_double(y) +
                              " at index " + std::to_string(i));
        const double d = y - predictions[i];
        se += d * d;
        ae += std::fabs(d);
        ape += std::fabs(d / y);
        abs_t += std::fabs(y);
    }

    MetricsReport r;
    r.n = static_cast<std::int64_t>(n);
    r.mse = se / n;
    r.rmse = std::sqrt(r.mse);
    r.mae = ae / n;
    r.mape = ape / n;
    r.mare = ae / abs_t;
    return r;
}

// Smallest integer >= p*n under real arithmetic; the relative nudge keeps
// values like 0.9*10 (= 9.000000000000002 in doubles) on the intended rank.
static std::int64_t coverage_rank(double p, std::int64_t n) {
    const double x = p * static_cast<double>(n);
    std::int64_t k = static_cast<std::int64_t>(std::ceil(x - std::fabs(x) * 1e-12 - 1e-12));
    if (k < 1) k = 1;
    if (k > n) k = n;
    return k;
}

double error_window(std::span<const double> targets, std::span<const double> predictions,
                    double p) {
    check_paired(targets, predictions, "error_window");
    if (!(p > 0.0 && p <= 1.0))
        throw ContractError("error_window: p must be in (0,1], got " + fmt_double(p));

    std::vector<double> abs_err(targets.size());
    for (size_t i = 0; i < targets.size(); ++i)
        abs_err[i] = std::fabs(targets[i] - predictions[i]);

    const std::int64_t k = coverage_rank(p, static_cast<std::int64_t>(abs_err.size()));
    std::nth_element(abs_err.begin(), abs_err.begin() + (k - 1), abs_err.end());
    return abs_err[k - 1];
}

// --- regularized incomplete beta via Lentz's continued fraction ---

static double betacf(double a, double b, double x) {
    constexpr int kMaxIter = 300;
    constexpr double kEps = 3e-14;
    constexpr double kTiny = 1e-300;

    const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::fabs(d) < kTiny) d = kTiny;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= kMaxIter; ++m) {
        const int m2 = 2 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < kTiny) d = kTiny;
        c = 1.0 + aa / c;
        if (std::fabs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < kTiny) d = kTiny;
        c = 1.0 + aa / c;
        if (std::fabs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < kEps) return h;
    }
    throw NumericError("incomplete beta continued fraction did not converge");
}

double reg_incomplete_beta(double a, double b, double x) {
    if (a <= 0.0 || b <= 0.0)
        throw ContractError("reg_incomplete_beta requires a, b > 0");
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    const double ln_front =
        std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) + b * std::log1p(-x);
    if (x < (a + 1.0) / (a + b + 2.0))
        return std::exp(ln_front) * betacf(a, b, x) / a;
    return 1.0 - std::exp(ln_front) * betacf(b, a, 1.0 - x) / b;
}

TTestResult paired_ttest(std::span<const double> a, std::span<const double> b) {
    check_paired(a, b, "paired_ttest");
    const size_t n = a.size();
    if (n < 2)
        throw ContractError("paired_ttest: need at least 2 pairs");

    double mean = 0;
    for (size_t i = 0; i < n; ++i) mean += a[i] - b[i];
    mean /= static_cast<double>(n);
    double ss = 0;
    for (size_t i = 0; i < n; ++i) {
        const double d = (a[i] - b[i]) - mean;
        ss += d * d;
    }
    const double var = ss / static_cast<double>(n - 1);

    TTestResult res;
    if (var == 0.0) {
        res.degenerate = true;
        res.p = 0.0;
        res.t = mean > 0   ? std::numeric_limits<double>::infinity()
                : mean < 0 ? -std::numeric_limits<double>::infinity()
                           : 0.0;
        return res;
    }
    const double se = std::sqrt(var / static_cast<double>(n));
    res.t = mean / se;
    const double df = static_cast<double>(n - 1);
    res.p = reg_incomplete_beta(df / 2.0, 0.5, df / (df + res.t * res.t));
    return res;
}

std::string report_to_text(const MetricsReport& r) {
    std::ostringstream os;
    os << "mse=" << fmt_double(r.mse) << "\n";
    os << "rmse=" << fmt_double(r.rmse) << "\n";
    os << "mae=" << fmt_double(r.mae) << "\n";
    os << "mape_pct=" << fmt_double(r.mape * 100.0) << "\n";
    os << "mare_pct=" << fmt_double(r.mare * 100.0) << "\n";
    os << "ew90_h=" << (std::isnan(r.ew) ? "nan" : fmt_double(r.ew)) << "\n";
    os << "n=" << r.n << "\n";
    return os.str();
}

} // namespace odtte
