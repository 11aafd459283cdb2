#include "robustgen/bounds.hpp"

#include <cmath>

#include "robustgen/errors.hpp"

namespace robustgen {

namespace {

double confidence_term(double B, double delta, std::size_t n) {
    if (delta <= 0.0 || delta >= 1.0) throw InvalidConfigError("delta must lie in (0, 1)");
    if (n == 0) throw InvalidConfigError("confidence term needs n >= 1");
    return 3.0 * B * std::sqrt(std::log(2.0 / delta) / (2.0 * static_cast<double>(n)));
}

}  // namespace

Matrix dataset_columns(const Dataset& ds) { return ds.features.transposed(); }

BoundCertificate generic_bound(double empirical_risk, const RademacherEstimate& rad, double B,
                               double delta, std::size_t n) {
    if (B < 0.0) throw InvalidConfigError("loss range B must be >= 0");
    if (empirical_risk < 0.0 || empirical_risk > B)
        throw InvalidConfigError("empirical risk must lie in [0, B]");

    BoundCertificate cert;
    cert.empirical_term = empirical_risk;
    cert.complexity_term = 2.0 * B * rad.mean;
    cert.confidence_term = confidence_term(B, delta, n);
    cert.total = cert.empirical_term + cert.complexity_term + cert.confidence_term;
    cert.context = BoundContext{0.0, 0.0, delta, B, n, 0, 0};
    return cert;
}

BoundCertificate margin_bound_multiclass(const LinearModel& model, const Dataset& ds, double gamma,
                                         double epsilon, double delta, RademacherMode mode,
                                         const SampleSpec& spec) {
    ds.validate();
    if (model.dim() != ds.d || model.num_classes() != ds.num_classes)
        throw InvalidConfigError("margin_bound_multiclass: model/dataset mismatch");
    if (gamma <= 0.0) throw InvalidConfigError("margin_bound_multiclass: gamma must be > 0");
    const double eps = mode == RademacherMode::adversarial ? epsilon : 0.0;

    const double max_row = model.max_row_norm(model.constraint.p);
    const double w_bound = (model.constraint.enforced && max_row <= model.constraint.bound + 1e-9)
                               ? model.constraint.bound
                               : max_row;

    double violations = 0.0;
    for (std::size_t i = 0; i < ds.size(); ++i) {
        const double m = multiclass_adv_margin(model.weights, ds.example(i), ds.labels[i], eps).value;
        if (m <= gamma) violations += 1.0;
    }

    const auto terms = rademacher_multiclass_terms(dataset_columns(ds), ds.labels, eps,
                                                   model.constraint.p, w_bound, gamma,
                                                   ds.num_classes, spec);

    BoundCertificate cert;
    cert.empirical_term = violations / static_cast<double>(ds.size());
    cert.complexity_term = mode == RademacherMode::adversarial ? terms.adversarial : terms.natural;
    cert.confidence_term = confidence_term(1.0, delta, ds.size());
    cert.total = cert.empirical_term + cert.complexity_term + cert.confidence_term;
    cert.context = BoundContext{gamma, eps, delta, 1.0, ds.size(), ds.d, ds.num_classes};
    return cert;
}

NnBoundsRecord nn_bounds(const MlpModel& model, const Matrix& x_cols, double epsilon,
                         std::optional<double> r_override, double c_param) {
    model.validate();
    if (model.input_dim() != x_cols.rows())
        throw InvalidConfigError("nn_bounds: model input dim must equal rows of X");
    const auto n = static_cast<double>(x_cols.cols());
    if (n == 0.0) throw InvalidConfigError("nn_bounds: empty sample");

    NnBoundsRecord rec;
    rec.c_param = c_param;
    rec.x_fro = frobenius_norm(x_cols);
    rec.d_max = model.input_dim();
    double spectral_product = 1.0;
    double ratio_sum = 0.0;
    for (const auto& w : model.layers) {
        rec.d_max = std::max(rec.d_max, w.rows());
        const double s = spectral_norm(w);
        const double b =
            group_norm_pq(w.transposed(), NormExponent::finite(2.0), NormExponent::finite(1.0));
        rec.spectral.push_back(s);
        rec.transpose_21.push_back(b);
        spectral_product *= s;
        ratio_sum += s > 0.0 ? std::pow(b / s, 2.0 / 3.0) : 0.0;
    }
    rec.spectral_product = r_override.value_or(spectral_product);

    rec.natural_upper =
        4.0 / std::pow(n, 1.5) +
        (26.0 * std::log(n) * std::log(2.0 * static_cast<double>(rec.d_max)) / n) * rec.x_fro *
            spectral_product * std::pow(ratio_sum, 1.5);
    rec.adversarial_lower =
        c_param * rec.spectral_product *
        (rec.x_fro / n + epsilon * std::sqrt(static_cast<double>(model.input_dim()) / n));
    return rec;
}

BoundCertificate sdp_margin_bound(const SurrogateEvaluator& eval, const Dataset& ds, double gamma,
                                  double epsilon, double delta) {
    ds.validate();
    const MlpModel& model = eval.model();
    if (model.input_dim() != ds.d || model.output_dim() != ds.num_classes)
        throw InvalidConfigError("sdp_margin_bound: model/dataset mismatch");
    if (gamma <= 0.0) throw InvalidConfigError("sdp_margin_bound: gamma must be > 0");
    if (epsilon < 0.0) throw InvalidConfigError("sdp_margin_bound: epsilon must be >= 0");

    const std::size_t n = ds.size();
    double violations = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        if (eval.threshold_indicator(ds.example(i), ds.labels[i], epsilon, gamma)) violations += 1.0;

    const double s1 = spectral_norm(model.layers[0]);
    const double s2 = spectral_norm(model.layers[1]);
    const double b1 =
        group_norm_pq(model.layers[0], NormExponent::finite(1.0), NormExponent::finite(1.0));
    const double b2 = group_norm_pq(model.layers[1].transposed(), NormExponent::finite(2.0),
                                    NormExponent::finite(1.0));
    const std::size_t d_max = std::max({ds.d, model.layers[0].rows(), ds.num_classes});
    const double nf = static_cast<double>(n);
    const double ratio_sum = (s1 > 0.0 ? std::pow(b1 / s1, 2.0 / 3.0) : 0.0) +
                             (s2 > 0.0 ? std::pow(b2 / s2, 2.0 / 3.0) : 0.0);
    const double x_fro = frobenius_norm(ds.features);

    BoundCertificate cert;
    cert.empirical_term = violations / nf;
    cert.complexity_term =
        (1.0 / gamma) *
        (4.0 / std::pow(nf, 1.5) +
         (60.0 * std::log(nf) * std::log(2.0 * static_cast<double>(d_max)) / nf) * s1 * s2 *
             std::pow(ratio_sum, 1.5) * x_fro +
         2.0 * epsilon * b1 * b2 / std::sqrt(nf));
    cert.confidence_term = confidence_term(1.0, delta, n);
    cert.total = cert.empirical_term + cert.complexity_term + cert.confidence_term;
    cert.context = BoundContext{gamma, epsilon, delta, 1.0, n, ds.d, ds.num_classes};
    return cert;
}

BoundCertificate sdp_margin_bound(const MlpModel& model, const Dataset& ds, double gamma,
                                  double epsilon, double delta, const SdpOptions& opts) {
    return sdp_margin_bound(SurrogateEvaluator(model, opts), ds, gamma, epsilon, delta);
}

}  // namespace robustgen
