// Accumulators and Monte Carlo error bars.
#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace sipkit {

/// Neumaier (improved Kahan) compensated summation.
class CompensatedSum {
public:
    void add(double x) noexcept;
    double value() const noexcept { return sum_ + comp_; }
    CompensatedSum& operator+=(double x) noexcept {
        add(x);
        return *this;
    }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

double compensated_sum(std::span<const double> xs) noexcept;

/// Sample mean with a standard error. `se` is a batch-means standard error
/// unless the sample is too small to batch.
struct MeanEstimate {
    double mean = 0.0;
    double se = 0.0;
    std::size_t count = 0;

    /// 95% half-width.
    double half_width() const noexcept { return 1.959963984540054 * se; }
};

inline constexpr std::size_t kDefaultBatches = 32;

/// Mean with batch-means standard error over `batches` contiguous batches.
/// Falls back to the naive i.i.d. standard error when there are fewer
/// samples than 2 * batches.
MeanEstimate batch_means(std::span<const double> samples,
                         std::size_t batches = kDefaultBatches);

/// Naive i.i.d. mean and standard error.
MeanEstimate naive_mean(std::span<const double> samples);

/// L^p norm estimate (E|Y|^p)^{1/p} from samples of |Y|, with a
/// delta-method standard error built on the batch-means error of E|Y|^p.
struct NormEstimate {
    double value = 0.0;
    double se = 0.0;
    std::size_t count = 0;
    double half_width() const noexcept { return 1.959963984540054 * se; }
};

NormEstimate lp_norm(std::span<const double> abs_samples, double p,
                     std::size_t batches = kDefaultBatches);

/// Two-sample Kolmogorov-Smirnov statistic.
double ks_distance(std::vector<double> a, std::vector<double> b);

/// Pearson chi-square statistic of a contingency table (rows x cols),
/// returned together with its degrees of freedom.
struct ChiSquare {
    double statistic = 0.0;
    int dof = 0;
    double p_value = 1.0;
};
ChiSquare chi_square_independence(const std::vector<std::vector<double>>& table);

/// Upper tail of the chi-square distribution.
double chi_square_sf(double x, int dof);

/// Least-squares slope and residual RMS of y on x.
struct LinearFit {
    double slope = 0.0;
    double intercept = 0.0;
    double residual_rms = 0.0;
};
LinearFit least_squares(std::span<const double> x, std::span<const double> y);

}  // namespace sipkit
