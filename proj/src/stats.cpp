#include "sipkit/stats.hpp"

#include <algorithm>
#include <boost/math/distributions/chi_squared.hpp>
#include <cmath>
#include <stdexcept>

namespace sipkit {

void CompensatedSum::add(double x) noexcept {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x)) {
        comp_ += (sum_ - t) + x;
    } else {
        comp_ += (x - t) + sum_;
    }
    sum_ = t;
}

double compensated_sum(std::span<const double> xs) noexcept {
    CompensatedSum acc;
    for (double x : xs) acc.add(x);
    return acc.value();
}

MeanEstimate naive_mean(std::span<const double> samples) {
    MeanEstimate est;
    est.count = samples.size();
    if (samples.empty()) return est;
    est.mean = compensated_sum(samples) / static_cast<double>(samples.size());
    if (samples.size() < 2) return est;
    CompensatedSum ss;
    for (double x : samples) ss.add((x - est.mean) * (x - est.mean));
    const double var = ss.value() / static_cast<double>(samples.size() - 1);
    est.se = std::sqrt(var / static_cast<double>(samples.size()));
    return est;
}

MeanEstimate batch_means(std::span<const double> samples, std::size_t batches) {
    if (batches < 2 || samples.size() < 2 * batches) return naive_mean(samples);
    MeanEstimate est;
    est.count = samples.size();
    est.mean = compensated_sum(samples) / static_cast<double>(samples.size());

    const std::size_t n = samples.size();
    std::vector<double> batch_mean(batches);
    for (std::size_t b = 0; b < batches; ++b) {
        const std::size_t lo = b * n / batches;
        const std::size_t hi = (b + 1) * n / batches;
        batch_mean[b] = compensated_sum(samples.subspan(lo, hi - lo)) /
                        static_cast<double>(hi - lo);
    }
    CompensatedSum ss;
    for (double m : batch_mean) ss.add((m - est.mean) * (m - est.mean));
    const double var_of_batch_mean = ss.value() / static_cast<double>(batches - 1);
    est.se = std::sqrt(var_of_batch_mean / static_cast<double>(batches));
    return est;
}

NormEstimate lp_norm(std::span<const double> abs_samples, double p, std::size_t batches) {
    if (!(p >= 1.0)) throw std::invalid_argument("lp_norm: p must be >= 1");
    std::vector<double> powered(abs_samples.size());
    for (std::size_t i = 0; i < abs_samples.size(); ++i) {
        const double v = std::abs(abs_samples[i]);
        if (!std::isfinite(v)) throw std::domain_error("lp_norm: non-finite sample");
        powered[i] = std::pow(v, p);
    }
    const MeanEstimate m = batch_means(powered, batches);
    NormEstimate out;
    out.count = m.count;
    if (m.mean <= 0.0) return out;
    out.value = std::pow(m.mean, 1.0 / p);
    out.se = (1.0 / p) * std::pow(m.mean, 1.0 / p - 1.0) * m.se;
    return out;
}

double ks_distance(std::vector<double> a, std::vector<double> b) {
    if (a.empty() || b.empty()) throw std::invalid_argument("ks_distance: empty sample");
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    const double na = static_cast<double>(a.size());
    const double nb = static_cast<double>(b.size());
    std::size_t i = 0, j = 0;
    double d = 0.0;
    while (i < a.size() && j < b.size()) {
        const double x = std::min(a[i], b[j]);
        while (i < a.size() && a[i] <= x) ++i;
        while (j < b.size() && b[j] <= x) ++j;
        d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
    }
    return d;
}

double chi_square_sf(double x, int dof) {
    if (dof <= 0) throw std::invalid_argument("chi_square_sf: dof must be positive");
    if (x <= 0.0) return 1.0;
    boost::math::chi_squared dist(dof);
    return boost::math::cdf(boost::math::complement(dist, x));
}

ChiSquare chi_square_independence(const std::vector<std::vector<double>>& table) {
    const std::size_t rows = table.size();
    if (rows < 2) throw std::invalid_argument("chi_square_independence: need >= 2 rows");
    const std::size_t cols = table.front().size();
    std::vector<double> row_sum(rows, 0.0), col_sum(cols, 0.0);
    double total = 0.0;
    for (std::size_t r = 0; r < rows; ++r) {
        if (table[r].size() != cols) throw std::invalid_argument("ragged table");
        for (std::size_t c = 0; c < cols; ++c) {
            row_sum[r] += table[r][c];
            col_sum[c] += table[r][c];
            total += table[r][c];
        }
    }
    ChiSquare out;
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < cols; ++c) {
            const double expected = row_sum[r] * col_sum[c] / total;
            if (expected > 0.0) {
                const double diff = table[r][c] - expected;
                out.statistic += diff * diff / expected;
            }
        }
    }
    out.dof = static_cast<int>((rows - 1) * (cols - 1));
    out.p_value = chi_square_sf(out.statistic, out.dof);
    return out;
}

LinearFit least_squares(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size() || x.size() < 2)
        throw std::invalid_argument("least_squares: need >= 2 paired points");
    const double n = static_cast<double>(x.size());
    const double mx = compensated_sum(x) / n;
    const double my = compensated_sum(y) / n;
    CompensatedSum sxx, sxy;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx.add((x[i] - mx) * (x[i] - mx));
        sxy.add((x[i] - mx) * (y[i] - my));
    }
    LinearFit fit;
    if (sxx.value() <= 0.0) throw std::invalid_argument("least_squares: degenerate x");
    fit.slope = sxy.value() / sxx.value();
    fit.intercept = my - fit.slope * mx;
    CompensatedSum rss;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double r = y[i] - (fit.intercept + fit.slope * x[i]);
        rss.add(r * r);
    }
    fit.residual_rms = std::sqrt(rss.value() / n);
    return fit;
}

}  // namespace sipkit
