#pragma once

#include <optional>

#include "robustgen/data.hpp"
#include "robustgen/linear.hpp"
#include "robustgen/mlp.hpp"
#include "robustgen/rademacher.hpp"
#include "robustgen/sdp.hpp"

namespace robustgen {

struct BoundContext {
    double gamma = 0.0;
    double epsilon = 0.0;
    double delta = 0.0;
    double loss_bound = 1.0;  // B, the loss range
    std::size_t n = 0;
    std::size_t d = 0;
    std::size_t num_classes = 0;
};

// Additive decomposition of a high-probability risk bound:
//   risk <= empirical + complexity + confidence
struct BoundCertificate {
    double empirical_term = 0.0;
    double complexity_term = 0.0;
    double confidence_term = 0.0;
    double total = 0.0;
    BoundContext context;
};

// risk <= empirical + 2 B Rademacher + 3 B sqrt(log(2/delta) / (2n))
BoundCertificate generic_bound(double empirical_risk, const RademacherEstimate& rad, double B,
                               double delta, std::size_t n);

// Margin bounds for multi-class linear classifiers. The empirical term
// counts gamma-margin violations (worst-case margins in adversarial
// mode); the complexity term comes from rademacher_multiclass_terms. W is
// the constraint bound when it actually holds for the model, otherwise
// the largest row lp-norm.
BoundCertificate margin_bound_multiclass(const LinearModel& model, const Dataset& ds, double gamma,
                                         double epsilon, double delta, RademacherMode mode,
                                         const SampleSpec& spec = SampleSpec::monte_carlo(2000));

// Spectral-norm complexity bounds for ReLU networks, evaluated with the
// model's measured norms plugged in as the class parameters.
struct NnBoundsRecord {
    double natural_upper = 0.0;       // log-dimension upper bound on the natural complexity
    double adversarial_lower = 0.0;   // c * r * (||X||_F / n + eps sqrt(d/n))
    double c_param = 1.0;             // the unknown universal constant, user supplied
    double spectral_product = 0.0;    // r = prod_h s_h (or the caller's override)
    std::vector<double> spectral;     // s_h
    std::vector<double> transpose_21; // b_h
    double x_fro = 0.0;
    std::size_t d_max = 0;
};

NnBoundsRecord nn_bounds(const MlpModel& model, const Matrix& x_cols, double epsilon,
                         std::optional<double> r_override, double c_param);

// Margin bound for the SDP surrogate adversarial loss of one-hidden-layer
// networks. The empirical term thresholds margins at gamma plus the
// cached (epsilon/2) s_star shift.
BoundCertificate sdp_margin_bound(const MlpModel& model, const Dataset& ds, double gamma,
                                  double epsilon, double delta, const SdpOptions& opts = {});
BoundCertificate sdp_margin_bound(const SurrogateEvaluator& eval, const Dataset& ds, double gamma,
                                  double epsilon, double delta);

// Column-per-example matrix view of a dataset (the X of the bounds).
Matrix dataset_columns(const Dataset& ds);

}  // namespace robustgen
