#include "pinlab/stats.hpp"

#include <stdexcept>

#include <boost/math/distributions/fisher_f.hpp>
#include <boost/math/distributions/students_t.hpp>

namespace pinlab {

double percentile(std::vector<double> values, double q) {
    if (values.empty()) return kMissing;
    std::sort(values.begin(), values.end());
    double const pos = std::clamp(q, 0.0, 100.0) / 100.0 * double(values.size() - 1);
    auto const lo = static_cast<std::size_t>(std::floor(pos));
    auto const hi = std::min(lo + 1, values.size() - 1);
    double const frac = pos - double(lo);
    return values[lo] + frac * (values[hi] - values[lo]);
}

double correlation_p_value(double r, std::size_t n) {
    if (n < 3 || std::isnan(r)) return kMissing;
    double const df = double(n - 2);
    double const one_minus = 1.0 - r * r;
    if (one_minus <= 0.0) return 0.0;
    double const t = r * std::sqrt(df / one_minus);
    boost::math::students_t dist(df);
    return 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t)));
}

double f_upper_p(double f, double df1, double df2) {
    if (!(df1 > 0) || !(df2 > 0) || std::isnan(f)) return kMissing;
    if (f <= 0) return 1.0;
    if (std::isinf(f)) return 0.0;
    boost::math::fisher_f dist(df1, df2);
    return boost::math::cdf(boost::math::complement(dist, f));
}

}  // namespace pinlab
