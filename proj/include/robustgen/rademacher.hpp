#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "robustgen/numerics.hpp"

namespace robustgen {

struct RademacherEstimate {
    double mean = 0.0;
    double std_error = 0.0;
    std::size_t samples = 0;
    bool exact = false;
};

enum class RademacherMode { natural, adversarial };

// How to average over sign vectors: full enumeration of all 2^n sign
// vectors (n <= 20), or Monte Carlo with antithetic pairs (sigma, -sigma)
// drawn from a fixed seed.
struct SampleSpec {
    static SampleSpec exact() { return SampleSpec{true, 0, 0}; }
    static SampleSpec monte_carlo(std::size_t samples, std::uint64_t seed = 0x5D7EAD) {
        return SampleSpec{false, samples, seed};
    }
    bool use_exact = true;
    std::size_t mc_samples = 0;
    std::uint64_t seed = 0;
};

// Empirical Rademacher complexity of lp-bounded linear classes over the
// sample X (one column per example).
//   natural:     (W/n) E_sigma || sum_i sigma_i x_i ||_q
//   adversarial: (W/n) E_sigma || u - v sgn(u) ||_q,
//                u = sum_i sigma_i y_i x_i, v = eps * sum_i sigma_i
// with q the dual exponent of p and sgn(0) = 0. Adversarial mode needs
// +/-1 labels.
RademacherEstimate rademacher_linear(const Matrix& x_cols, const std::vector<int>* labels,
                                     const NormExponent& p, double w_bound, double epsilon,
                                     RademacherMode mode, const SampleSpec& spec);

// All the provable comparisons around the adversarial complexity of
// binary linear classes, evaluated on common sign draws:
//   natural <= adversarial <= natural + eps W d^{1/q} / sqrt(n)
//   adversarial >= (W/n) eps d^{1/q} E|sum_i sigma_i|
// The unknown universal constant c of the matching lower bound is never
// asserted.
struct SandwichReport {
    double natural = 0.0;
    double adversarial = 0.0;
    double upper = 0.0;                 // natural + eps W d^{1/q} / sqrt(n)
    double lower_natural = 0.0;         // = natural
    double lower_dimension = 0.0;       // (W/n) eps d^{1/q} E|sum sigma|
    double mean_abs_sigma_sum = 0.0;    // E|sum_i sigma_i|
    double natural_std_error = 0.0;
    double adversarial_std_error = 0.0;
    bool exact = false;
    bool holds_upper = false;
    bool holds_lower_natural = false;
    bool holds_lower_dimension = false;
};

SandwichReport sandwich_check(const Matrix& x_cols, const std::vector<int>& labels,
                              const NormExponent& p, double w_bound, double epsilon,
                              const SampleSpec& spec);

// Complexity terms of the multi-class margin bounds:
//   adversarial: (2WK/gamma) [ eps sqrt(K) d^{1/q} / sqrt(n)
//                              + (1/n) sum_y E|| sum_i sigma_i x_i 1(y_i=y) ||_q ]
//   natural:     (4KW/(gamma n)) E|| sum_i sigma_i x_i ||_q
struct MulticlassTerms {
    double adversarial = 0.0;
    double natural = 0.0;
    double per_class_norm_mean = 0.0;  // (1/n) sum_y E||u_y||_q
    std::size_t samples = 0;
    bool exact = false;
};

MulticlassTerms rademacher_multiclass_terms(const Matrix& x_cols, const std::vector<int>& labels,
                                            double epsilon, const NormExponent& p, double w_bound,
                                            double gamma, std::size_t num_classes,
                                            const SampleSpec& spec);

}  // namespace robustgen
