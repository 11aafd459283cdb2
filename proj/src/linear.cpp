#include "robustgen/linear.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "robustgen/errors.hpp"
#include "robustgen/prng.hpp"

namespace robustgen {

namespace {

inline double sgn0(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

void check_epsilon(double epsilon) {
    if (epsilon < 0.0) throw InvalidConfigError("epsilon must be >= 0");
}

}  // namespace

void TrainConfig::validate() const {
    if (epsilon < 0.0 || lambda < 0.0) throw InvalidConfigError("epsilon and lambda must be >= 0");
    if (lr <= 0.0) throw InvalidConfigError("learning rate must be > 0");
    if (batch == 0 || epochs == 0) throw InvalidConfigError("batch and epochs must be positive");
}

double LinearModel::max_row_norm(const NormExponent& p) const {
    double m = 0.0;
    for (std::size_t k = 0; k < weights.rows(); ++k) m = std::max(m, lp_norm(weights.row(k), p));
    return m;
}

double binary_adv_value(std::span<const double> w, std::span<const double> x, int y,
                        double epsilon) {
    check_epsilon(epsilon);
    return y * dot(w, x) - epsilon * lp_norm(w, NormExponent::finite(1.0));
}

std::vector<double> binary_adv_example(std::span<const double> w, std::span<const double> x, int y,
                                       double epsilon) {
    check_epsilon(epsilon);
    std::vector<double> out(x.begin(), x.end());
    for (std::size_t j = 0; j < w.size(); ++j) out[j] -= epsilon * y * sgn0(w[j]);
    return out;
}

AdvMargin multiclass_adv_margin(const Matrix& weights, std::span<const double> x, int y,
                                double epsilon) {
    check_epsilon(epsilon);
    const std::size_t k = weights.rows();
    if (k < 2) throw InvalidConfigError("multiclass margin requires K >= 2");
    if (y < 1 || static_cast<std::size_t>(y) > k) throw InvalidConfigError("label out of range");

    const auto wy = weights.row(static_cast<std::size_t>(y - 1));
    AdvMargin best{std::numeric_limits<double>::infinity(), 0};
    for (std::size_t c = 0; c < k; ++c) {
        if (c == static_cast<std::size_t>(y - 1)) continue;
        const auto wc = weights.row(c);
        double ip = 0.0, l1 = 0.0;
        for (std::size_t j = 0; j < weights.cols(); ++j) {
            const double diff = wy[j] - wc[j];
            ip += diff * x[j];
            l1 += std::abs(diff);
        }
        const double value = ip - epsilon * l1;
        if (value < best.value) {
            best.value = value;
            best.argmin_class = static_cast<int>(c) + 1;
        }
    }
    return best;
}

std::vector<double> multiclass_adv_example(const Matrix& weights, std::span<const double> x, int y,
                                           double epsilon) {
    const AdvMargin m = multiclass_adv_margin(weights, x, y, epsilon);
    const auto wy = weights.row(static_cast<std::size_t>(y - 1));
    const auto wc = weights.row(static_cast<std::size_t>(m.argmin_class - 1));
    std::vector<double> out(x.begin(), x.end());
    for (std::size_t j = 0; j < out.size(); ++j) out[j] -= epsilon * sgn0(wy[j] - wc[j]);
    return out;
}

double ramp_loss(double t, double gamma) {
    if (gamma <= 0.0) throw InvalidConfigError("ramp loss requires gamma > 0");
    if (t <= 0.0) return 1.0;
    if (t >= gamma) return 0.0;
    return 1.0 - t / gamma;
}

double margin(std::span<const double> scores, int y) {
    if (scores.size() < 2) throw InvalidConfigError("margin requires K >= 2");
    if (y < 1 || static_cast<std::size_t>(y) > scores.size())
        throw InvalidConfigError("label out of range");
    double best_other = -std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < scores.size(); ++c) {
        if (c == static_cast<std::size_t>(y - 1)) continue;
        best_other = std::max(best_other, scores[c]);
    }
    return scores[static_cast<std::size_t>(y - 1)] - best_other;
}

std::vector<double> softmax(std::span<const double> scores) {
    const double zmax = *std::max_element(scores.begin(), scores.end());
    std::vector<double> p(scores.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        p[i] = std::exp(scores[i] - zmax);
        sum += p[i];
    }
    for (double& v : p) v /= sum;
    return p;
}

double cross_entropy(std::span<const double> scores, int y) {
    const double zmax = *std::max_element(scores.begin(), scores.end());
    double sum = 0.0;
    for (double z : scores) sum += std::exp(z - zmax);
    return std::log(sum) - (scores[static_cast<std::size_t>(y - 1)] - zmax);
}

void project_lp_ball(std::span<double> v, const NormExponent& p, double radius) {
    if (radius < 0.0) throw InvalidConfigError("ball radius must be >= 0");
    const double norm = lp_norm(v, p);
    if (norm <= radius) return;
    if (p.is_infinite()) {
        for (double& x : v) x = std::clamp(x, -radius, radius);
        return;
    }
    if (p.value() == 2.0) {
        const double scale = radius / norm;
        for (double& x : v) x *= scale;
        return;
    }
    if (p.value() == 1.0) {
        // Euclidean projection onto the l1 ball via the sorted-threshold rule.
        std::vector<double> mag(v.size());
        for (std::size_t i = 0; i < v.size(); ++i) mag[i] = std::abs(v[i]);
        std::sort(mag.begin(), mag.end(), std::greater<double>());
        double cum = 0.0, theta = 0.0;
        for (std::size_t i = 0; i < mag.size(); ++i) {
            cum += mag[i];
            const double t = (cum - radius) / static_cast<double>(i + 1);
            if (i + 1 == mag.size() || mag[i + 1] <= t) {
                theta = t;
                break;
            }
        }
        for (double& x : v) x = sgn0(x) * std::max(std::abs(x) - theta, 0.0);
        return;
    }
    // General finite p: radial scaling into the ball (feasible, not the
    // nearest point; exact projection has no closed form for p not in
    // {1, 2, inf}).
    const double scale = radius / norm;
    for (double& x : v) x *= scale;
}

namespace {

double adversarial_objective(const Matrix& w, const Dataset& ds, double epsilon, double lambda) {
    double loss = 0.0;
    for (std::size_t i = 0; i < ds.size(); ++i) {
        const auto xadv = multiclass_adv_example(w, ds.example(i), ds.labels[i], epsilon);
        loss += cross_entropy(matvec(w, xadv), ds.labels[i]);
    }
    loss /= static_cast<double>(ds.size());
    double l1 = 0.0;
    for (double x : w.data()) l1 += std::abs(x);
    return loss + lambda * l1;
}

void soft_threshold(Matrix& w, double t) {
    if (t <= 0.0) return;
    for (double& x : w.data()) x = sgn0(x) * std::max(std::abs(x) - t, 0.0);
}

}  // namespace

LinearTrainResult train_linear(const Dataset& ds, const TrainConfig& cfg,
                               const NormConstraint& constraint) {
    cfg.validate();
    ds.validate();
    if (ds.size() == 0) throw InvalidConfigError("train_linear: empty dataset");
    if (ds.num_classes < 2) throw InvalidConfigError("train_linear: need K >= 2");

    const std::size_t n = ds.size();
    const std::size_t k = ds.num_classes;
    const std::size_t d = ds.d;

    LinearTrainResult result;
    result.model.weights = Matrix(k, d);
    result.model.constraint = constraint;
    Matrix& w = result.model.weights;

    result.loss_trace.push_back(adversarial_objective(w, ds, cfg.epsilon, cfg.lambda));

    SplitMix64 rng(derive_seed(cfg.seed, 0x11));
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);

    Matrix grad(k, d);
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        for (std::size_t i = 0; i + 1 < n; ++i) {
            const std::size_t j = i + rng.uniform_index(n - i);
            std::swap(order[i], order[j]);
        }
        for (std::size_t start = 0; start < n; start += cfg.batch) {
            const std::size_t stop = std::min(start + cfg.batch, n);
            std::fill(grad.data().begin(), grad.data().end(), 0.0);
            for (std::size_t b = start; b < stop; ++b) {
                const std::size_t i = order[b];
                const int y = ds.labels[i];
                const auto xadv = multiclass_adv_example(w, ds.example(i), y, cfg.epsilon);
                const auto p = softmax(matvec(w, xadv));
                for (std::size_t c = 0; c < k; ++c) {
                    const double coeff = p[c] - (c == static_cast<std::size_t>(y - 1) ? 1.0 : 0.0);
                    auto grow = grad.row(c);
                    for (std::size_t j = 0; j < d; ++j) grow[j] += coeff * xadv[j];
                }
            }
            const double scale = cfg.lr / static_cast<double>(stop - start);
            for (std::size_t idx = 0; idx < w.size(); ++idx)
                w.data()[idx] -= scale * grad.data()[idx];
            soft_threshold(w, cfg.lr * cfg.lambda);
            if (constraint.enforced) {
                for (std::size_t c = 0; c < k; ++c)
                    project_lp_ball(w.row(c), constraint.p, constraint.bound);
            }
        }
        const double obj = adversarial_objective(w, ds, cfg.epsilon, cfg.lambda);
        if (!std::isfinite(obj)) throw DivergenceError("train_linear: non-finite loss", epoch);
        result.loss_trace.push_back(obj);
    }
    return result;
}

LinearMetrics eval_linear(const LinearModel& model, const Dataset& ds, double epsilon,
                          double gamma) {
    check_epsilon(epsilon);
    if (model.dim() != ds.d) throw InvalidConfigError("eval_linear: model/dataset dim mismatch");
    if (model.num_classes() != ds.num_classes)
        throw InvalidConfigError("eval_linear: model/dataset class count mismatch");
    if (model.num_classes() < 2) throw InvalidConfigError("eval_linear: need K >= 2");

    LinearMetrics m{};
    m.gamma = gamma;
    double nat_err = 0.0, adv_err = 0.0, nat_ramp = 0.0, adv_ramp = 0.0;
    for (std::size_t i = 0; i < ds.size(); ++i) {
        const auto x = ds.example(i);
        const int y = ds.labels[i];
        const double nat_margin = multiclass_adv_margin(model.weights, x, y, 0.0).value;
        const double adv_margin = multiclass_adv_margin(model.weights, x, y, epsilon).value;
        nat_err += nat_margin <= 0.0 ? 1.0 : 0.0;
        adv_err += adv_margin <= 0.0 ? 1.0 : 0.0;
        nat_ramp += ramp_loss(nat_margin, gamma);
        adv_ramp += ramp_loss(adv_margin, gamma);
    }
    const double inv_n = 1.0 / static_cast<double>(ds.size());
    m.natural_error = nat_err * inv_n;
    m.adversarial_error = adv_err * inv_n;
    m.natural_ramp = nat_ramp * inv_n;
    m.adversarial_ramp = adv_ramp * inv_n;
    for (std::size_t c = 0; c < model.num_classes(); ++c) {
        m.row_l1_norms.push_back(lp_norm(model.weights.row(c), NormExponent::finite(1.0)));
        m.row_lp_norms.push_back(lp_norm(model.weights.row(c), model.constraint.p));
    }
    return m;
}

}  // namespace robustgen
