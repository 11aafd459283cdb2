#include "robustgen/rademacher.hpp"

#include <cmath>
#include <functional>

#include "robustgen/errors.hpp"
#include "robustgen/prng.hpp"

namespace robustgen {

namespace {

constexpr std::size_t kExactCap = 20;

// Welford accumulator over antithetic pair means, one slot per channel.
class PairAccumulator {
public:
    explicit PairAccumulator(std::size_t channels) : mean_(channels, 0.0), m2_(channels, 0.0) {}

    void add(std::span<const double> values) {
        ++count_;
        for (std::size_t c = 0; c < mean_.size(); ++c) {
            const double delta = values[c] - mean_[c];
            mean_[c] += delta / static_cast<double>(count_);
            m2_[c] += delta * (values[c] - mean_[c]);
        }
    }

    double mean(std::size_t c) const { return static_cast<double>(mean_[c]); }
    double std_error(std::size_t c) const {
        if (count_ < 2) return 0.0;
        const long double var = m2_[c] / static_cast<long double>(count_ - 1);
        return static_cast<double>(std::sqrt(var / static_cast<long double>(count_)));
    }
    std::size_t count() const { return count_; }

private:
    std::vector<long double> mean_;
    std::vector<long double> m2_;
    std::size_t count_ = 0;
};

// Walks sign vectors as antithetic pairs: exact mode enumerates sigma with
// the last sign pinned to +1 (the other half is covered by the pair
// partner -sigma); MC mode draws pairs from the spec's seed. The callback
// receives sigma and must fold in both members of the pair.
void for_each_pair(const SampleSpec& spec, std::size_t n,
                   const std::function<void(std::span<const int>)>& fn) {
    std::vector<int> sigma(n, 1);
    if (spec.use_exact) {
        if (n > kExactCap)
            throw ResourceError("exact enumeration capped at n <= " + std::to_string(kExactCap));
        const std::uint64_t half = n == 0 ? 1 : (std::uint64_t{1} << (n - 1));
        for (std::uint64_t mask = 0; mask < half; ++mask) {
            for (std::size_t i = 0; i + 1 < n; ++i) sigma[i] = (mask >> i) & 1 ? 1 : -1;
            sigma[n - 1] = 1;
            fn(sigma);
        }
    } else {
        if (spec.mc_samples == 0) throw InvalidConfigError("mc_samples must be positive");
        const std::size_t pairs = (spec.mc_samples + 1) / 2;
        SplitMix64 rng(spec.seed);
        for (std::size_t s = 0; s < pairs; ++s) {
            for (std::size_t i = 0; i < n; ++i) sigma[i] = rng.sign();
            fn(sigma);
        }
    }
}

struct SignSums {
    std::vector<double> u;  // sum_i sigma_i y_i x_i
    double sigma_sum;       // sum_i sigma_i
};

SignSums accumulate_sums(const Matrix& x_cols, const std::vector<int>* labels,
                         std::span<const int> sigma) {
    const std::size_t d = x_cols.rows();
    const std::size_t n = x_cols.cols();
    SignSums s{std::vector<double>(d, 0.0), 0.0};
    for (std::size_t i = 0; i < n; ++i) {
        const double c = labels ? sigma[i] * (*labels)[i] : sigma[i];
        for (std::size_t j = 0; j < d; ++j) s.u[j] += c * x_cols(j, i);
        s.sigma_sum += sigma[i];
    }
    return s;
}

// Pair mean of || u -+ v sgn(u) ||_q over the antithetic pair (sigma, -sigma).
double adversarial_pair_mean(const SignSums& s, double epsilon, const NormExponent& q) {
    const double v = epsilon * s.sigma_sum;
    std::vector<double> minus(s.u.size()), plus(s.u.size());
    for (std::size_t j = 0; j < s.u.size(); ++j) {
        const double sg = s.u[j] > 0.0 ? 1.0 : (s.u[j] < 0.0 ? -1.0 : 0.0);
        minus[j] = s.u[j] - v * sg;
        plus[j] = s.u[j] + v * sg;
    }
    return 0.5 * (lp_norm(minus, q) + lp_norm(plus, q));
}

void require_binary_labels(const std::vector<int>* labels, std::size_t n) {
    if (!labels) throw InvalidConfigError("adversarial mode requires +/-1 labels");
    if (labels->size() != n) throw InvalidConfigError("label count does not match sample size");
    for (int y : *labels)
        if (y != 1 && y != -1) throw InvalidConfigError("adversarial mode labels must be +/-1");
}

double dim_factor(std::size_t d, const NormExponent& q) {
    if (q.is_infinite()) return 1.0;  // d^{1/q} with q = inf
    return std::pow(static_cast<double>(d), 1.0 / q.value());
}

}  // namespace

RademacherEstimate rademacher_linear(const Matrix& x_cols, const std::vector<int>* labels,
                                     const NormExponent& p, double w_bound, double epsilon,
                                     RademacherMode mode, const SampleSpec& spec) {
    const std::size_t n = x_cols.cols();
    if (n == 0) throw InvalidConfigError("rademacher_linear: empty sample");
    if (w_bound < 0.0 || epsilon < 0.0)
        throw InvalidConfigError("rademacher_linear: W and epsilon must be >= 0");
    if (mode == RademacherMode::adversarial) require_binary_labels(labels, n);

    const NormExponent q = dual_exponent(p);
    PairAccumulator acc(1);
    for_each_pair(spec, n, [&](std::span<const int> sigma) {
        if (mode == RademacherMode::natural) {
            // || sum sigma_i x_i ||_q is invariant under sigma -> -sigma.
            const SignSums s = accumulate_sums(x_cols, nullptr, sigma);
            const double value = lp_norm(s.u, q);
            acc.add(std::span<const double>(&value, 1));
        } else {
            const SignSums s = accumulate_sums(x_cols, labels, sigma);
            const double value = adversarial_pair_mean(s, epsilon, q);
            acc.add(std::span<const double>(&value, 1));
        }
    });

    const double scale = w_bound / static_cast<double>(n);
    RademacherEstimate est;
    est.mean = scale * acc.mean(0);
    est.exact = spec.use_exact;
    est.std_error = est.exact ? 0.0 : scale * acc.std_error(0);
    est.samples = est.exact ? (std::size_t{1} << n) : 2 * acc.count();
    return est;
}

SandwichReport sandwich_check(const Matrix& x_cols, const std::vector<int>& labels,
                              const NormExponent& p, double w_bound, double epsilon,
                              const SampleSpec& spec) {
    const std::size_t n = x_cols.cols();
    const std::size_t d = x_cols.rows();
    require_binary_labels(&labels, n);

    const NormExponent q = dual_exponent(p);
    // Channels share the sign draws: the natural norm is evaluated on the
    // label-absorbed sums (same distribution, exact per-pair comparisons).
    PairAccumulator acc(3);
    for_each_pair(spec, n, [&](std::span<const int> sigma) {
        const SignSums s = accumulate_sums(x_cols, &labels, sigma);
        const double values[3] = {adversarial_pair_mean(s, epsilon, q), lp_norm(s.u, q),
                                  std::abs(s.sigma_sum)};
        acc.add(values);
    });

    const double scale = w_bound / static_cast<double>(n);
    const double dq = dim_factor(d, q);

    SandwichReport report;
    report.exact = spec.use_exact;
    report.adversarial = scale * acc.mean(0);
    report.natural = scale * acc.mean(1);
    report.mean_abs_sigma_sum = acc.mean(2);
    report.adversarial_std_error = report.exact ? 0.0 : scale * acc.std_error(0);
    report.natural_std_error = report.exact ? 0.0 : scale * acc.std_error(1);
    report.upper = report.natural + epsilon * w_bound * dq / std::sqrt(static_cast<double>(n));
    report.lower_natural = report.natural;
    report.lower_dimension = scale * epsilon * dq * report.mean_abs_sigma_sum;

    const double slack = report.exact
                             ? 1e-10
                             : 3.0 * (report.adversarial_std_error + report.natural_std_error);
    report.holds_upper = report.adversarial <= report.upper + slack;
    report.holds_lower_natural = report.adversarial >= report.lower_natural - slack;
    report.holds_lower_dimension = report.adversarial >= report.lower_dimension - slack;
    return report;
}

MulticlassTerms rademacher_multiclass_terms(const Matrix& x_cols, const std::vector<int>& labels,
                                            double epsilon, const NormExponent& p, double w_bound,
                                            double gamma, std::size_t num_classes,
                                            const SampleSpec& spec) {
    const std::size_t n = x_cols.cols();
    const std::size_t d = x_cols.rows();
    if (labels.size() != n) throw InvalidConfigError("label count does not match sample size");
    for (int y : labels)
        if (y < 1 || static_cast<std::size_t>(y) > num_classes)
            throw InvalidConfigError("label outside [1, K]");
    if (gamma <= 0.0 || w_bound < 0.0 || epsilon < 0.0)
        throw InvalidConfigError("rademacher_multiclass_terms: bad parameters");

    const NormExponent q = dual_exponent(p);
    PairAccumulator acc(2);
    std::vector<double> uy(num_classes * d);
    for_each_pair(spec, n, [&](std::span<const int> sigma) {
        std::fill(uy.begin(), uy.end(), 0.0);
        std::vector<double> total(d, 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            const double si = sigma[i];
            double* dst = uy.data() + static_cast<std::size_t>(labels[i] - 1) * d;
            for (std::size_t j = 0; j < d; ++j) {
                const double v = si * x_cols(j, i);
                dst[j] += v;
                total[j] += v;
            }
        }
        double per_class = 0.0;
        for (std::size_t y = 0; y < num_classes; ++y)
            per_class += lp_norm(std::span<const double>(uy.data() + y * d, d), q);
        const double values[2] = {per_class, lp_norm(total, q)};
        acc.add(values);
    });

    const double sqrt_n = std::sqrt(static_cast<double>(n));
    const double k = static_cast<double>(num_classes);
    MulticlassTerms terms;
    terms.exact = spec.use_exact;
    terms.samples = terms.exact ? (std::size_t{1} << n) : 2 * acc.count();
    terms.per_class_norm_mean = acc.mean(0) / static_cast<double>(n);
    terms.adversarial = (2.0 * w_bound * k / gamma) *
                        (epsilon * std::sqrt(k) * dim_factor(d, q) / sqrt_n +
                         terms.per_class_norm_mean);
    terms.natural = (4.0 * k * w_bound / (gamma * static_cast<double>(n))) * acc.mean(1);
    return terms;
}

}  // namespace robustgen
