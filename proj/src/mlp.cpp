#include "robustgen/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "robustgen/errors.hpp"
#include "robustgen/prng.hpp"

namespace robustgen {

namespace {

inline double sgn0(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

}  // namespace

void MlpModel::validate() const {
    if (layers.empty()) throw InvalidConfigError("network needs at least one layer");
    for (std::size_t h = 1; h < layers.size(); ++h) {
        if (layers[h].cols() != layers[h - 1].rows())
            throw InvalidConfigError("layer " + std::to_string(h + 1) +
                                     " input dim does not chain with layer " + std::to_string(h));
    }
    for (const auto& w : layers)
        if (!w.all_finite()) throw InvalidConfigError("network has non-finite weights");
}

double AttackConfig::effective_step() const {
    return step_size > 0.0 ? step_size : 2.5 * epsilon / static_cast<double>(steps);
}

void AttackConfig::validate() const {
    if (epsilon < 0.0) throw InvalidConfigError("attack epsilon must be >= 0");
    if (steps < 1) throw InvalidConfigError("attack needs steps >= 1");
    if (restarts < 1) throw InvalidConfigError("attack needs restarts >= 1");
    if (step_size < 0.0) throw InvalidConfigError("attack step_size must be >= 0");
    if (clamp_domain && clamp_domain->first > clamp_domain->second)
        throw InvalidConfigError("clamp domain lo > hi");
}

std::vector<double> mlp_forward(const MlpModel& m, std::span<const double> x) {
    if (x.size() != m.input_dim()) throw InvalidConfigError("forward: input dim mismatch");
    std::vector<double> z(x.begin(), x.end());
    for (std::size_t h = 0; h < m.layers.size(); ++h) {
        z = matvec(m.layers[h], z);
        if (h + 1 < m.layers.size())
            for (double& v : z) v = std::max(v, 0.0);
    }
    return z;
}

ForwardTrace mlp_forward_trace(const MlpModel& m, std::span<const double> x) {
    if (x.size() != m.input_dim()) throw InvalidConfigError("forward: input dim mismatch");
    ForwardTrace t;
    t.post.emplace_back(x.begin(), x.end());
    for (std::size_t h = 0; h < m.layers.size(); ++h) {
        t.pre.push_back(matvec(m.layers[h], t.post.back()));
        if (h + 1 < m.layers.size()) {
            std::vector<double> act = t.pre.back();
            for (double& v : act) v = std::max(v, 0.0);
            t.post.push_back(std::move(act));
        }
    }
    return t;
}

Gradients mlp_backward(const MlpModel& m, const ForwardTrace& trace,
                       std::span<const double> dscores, bool want_input_grad) {
    const std::size_t depth = m.layers.size();
    Gradients g;
    g.weights.resize(depth);

    std::vector<double> delta(dscores.begin(), dscores.end());
    for (std::size_t h = depth; h-- > 0;) {
        const auto& input = trace.post[h];
        Matrix& gw = g.weights[h];
        gw = Matrix(m.layers[h].rows(), m.layers[h].cols());
        for (std::size_t i = 0; i < gw.rows(); ++i) {
            const double di = delta[i];
            if (di == 0.0) continue;
            auto row = gw.row(i);
            for (std::size_t j = 0; j < gw.cols(); ++j) row[j] = di * input[j];
        }
        if (h > 0 || want_input_grad) {
            std::vector<double> prev = matvec_transposed(m.layers[h], delta);
            if (h > 0) {
                // ReLU subgradient; 0 at the kink.
                const auto& pre = trace.pre[h - 1];
                for (std::size_t j = 0; j < prev.size(); ++j)
                    if (pre[j] <= 0.0) prev[j] = 0.0;
            }
            delta = std::move(prev);
        }
    }
    if (want_input_grad) g.input = std::move(delta);
    return g;
}

std::vector<double> cross_entropy_grad(std::span<const double> scores, int y) {
    std::vector<double> g = softmax(scores);
    g[static_cast<std::size_t>(y - 1)] -= 1.0;
    return g;
}

std::vector<double> neg_margin_grad(std::span<const double> scores, int y) {
    std::vector<double> g(scores.size(), 0.0);
    std::size_t best = scores.size();
    double best_val = -std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < scores.size(); ++c) {
        if (c == static_cast<std::size_t>(y - 1)) continue;
        if (scores[c] > best_val) {
            best_val = scores[c];
            best = c;
        }
    }
    g[best] = 1.0;
    g[static_cast<std::size_t>(y - 1)] = -1.0;
    return g;
}

double attack_loss_value(AttackLoss loss, std::span<const double> scores, int y) {
    return loss == AttackLoss::cross_entropy ? cross_entropy(scores, y) : -margin(scores, y);
}

std::vector<double> pgd_attack(const MlpModel& m, std::span<const double> x, int y,
                               const AttackConfig& a, AttackLoss loss) {
    a.validate();
    m.validate();
    if (m.output_dim() < 2) throw InvalidConfigError("pgd_attack: need K >= 2 outputs");
    const std::size_t d = x.size();
    const double eps = a.epsilon;
    const double step = a.effective_step();

    auto clamp_feasible = [&](std::vector<double>& v) {
        for (std::size_t j = 0; j < d; ++j) {
            v[j] = std::clamp(v[j], x[j] - eps, x[j] + eps);
            if (a.clamp_domain) v[j] = std::clamp(v[j], a.clamp_domain->first, a.clamp_domain->second);
        }
    };

    std::vector<double> best(x.begin(), x.end());
    double best_loss = attack_loss_value(loss, mlp_forward(m, x), y);

    for (std::size_t r = 0; r < a.restarts; ++r) {
        std::vector<double> cur(x.begin(), x.end());
        if (r > 0) {
            SplitMix64 rng(derive_seed(0x9D6A5ULL, r));
            for (std::size_t j = 0; j < d; ++j) cur[j] += rng.uniform(-eps, eps);
            clamp_feasible(cur);
        }
        for (std::size_t it = 0; it < a.steps; ++it) {
            const ForwardTrace trace = mlp_forward_trace(m, cur);
            const auto& scores = trace.pre.back();
            const double cur_loss = attack_loss_value(loss, scores, y);
            if (cur_loss > best_loss) {
                best_loss = cur_loss;
                best = cur;
            }
            const auto dscores = loss == AttackLoss::cross_entropy ? cross_entropy_grad(scores, y)
                                                                   : neg_margin_grad(scores, y);
            const Gradients g = mlp_backward(m, trace, dscores, /*want_input_grad=*/true);
            for (double v : g.input)
                if (!std::isfinite(v)) throw NumericalError("pgd_attack: non-finite gradient");
            for (std::size_t j = 0; j < d; ++j) cur[j] += step * sgn0(g.input[j]);
            clamp_feasible(cur);
        }
        const double final_loss = attack_loss_value(loss, mlp_forward(m, cur), y);
        if (final_loss > best_loss) {
            best_loss = final_loss;
            best = cur;
        }
    }
    return best;
}

namespace {

MlpModel init_net(std::size_t input, const std::vector<std::size_t>& hidden, std::size_t output,
                  std::uint64_t seed) {
    std::vector<std::size_t> dims;
    dims.push_back(input);
    dims.insert(dims.end(), hidden.begin(), hidden.end());
    dims.push_back(output);

    MlpModel m;
    SplitMix64 rng(derive_seed(seed, 0x22));
    for (std::size_t h = 0; h + 1 < dims.size(); ++h) {
        Matrix w(dims[h + 1], dims[h]);
        const double scale = std::sqrt(2.0 / static_cast<double>(dims[h]));
        for (double& v : w.data()) v = scale * rng.normal();
        m.layers.push_back(std::move(w));
    }
    m.validate();
    return m;
}

void soft_threshold_net(MlpModel& m, double t) {
    if (t <= 0.0) return;
    for (auto& w : m.layers)
        for (double& x : w.data()) x = sgn0(x) * std::max(std::abs(x) - t, 0.0);
}

double net_l1(const MlpModel& m) {
    double s = 0.0;
    for (const auto& w : m.layers)
        for (double x : w.data()) s += std::abs(x);
    return s;
}

struct EpochLosses {
    double natural;
    double adversarial;  // includes the l1 penalty
};

EpochLosses epoch_losses(const MlpModel& m, const Dataset& ds, const AttackConfig& attack,
                         double lambda) {
    double nat = 0.0, adv = 0.0;
    for (std::size_t i = 0; i < ds.size(); ++i) {
        const auto x = ds.example(i);
        nat += cross_entropy(mlp_forward(m, x), ds.labels[i]);
        const auto xadv = pgd_attack(m, x, ds.labels[i], attack, AttackLoss::cross_entropy);
        adv += cross_entropy(mlp_forward(m, xadv), ds.labels[i]);
    }
    const double inv_n = 1.0 / static_cast<double>(ds.size());
    return {nat * inv_n, adv * inv_n + lambda * net_l1(m)};
}

}  // namespace

MlpTrainResult train_net(const Dataset& ds, const std::vector<std::size_t>& hidden,
                         const AttackConfig& attack, double lambda, const TrainConfig& opt) {
    opt.validate();
    attack.validate();
    ds.validate();
    if (lambda < 0.0) throw InvalidConfigError("train_net: lambda must be >= 0");
    if (ds.num_classes < 2) throw InvalidConfigError("train_net: need K >= 2");

    MlpTrainResult result;
    result.model = init_net(ds.d, hidden, ds.num_classes, opt.seed);
    MlpModel& m = result.model;

    const auto init_losses = epoch_losses(m, ds, attack, lambda);
    result.natural_loss_trace.push_back(init_losses.natural);
    result.adversarial_loss_trace.push_back(init_losses.adversarial);

    const std::size_t n = ds.size();
    SplitMix64 rng(derive_seed(opt.seed, 0x33));
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);

    for (std::size_t epoch = 0; epoch < opt.epochs; ++epoch) {
        for (std::size_t i = 0; i + 1 < n; ++i) {
            const std::size_t j = i + rng.uniform_index(n - i);
            std::swap(order[i], order[j]);
        }
        for (std::size_t start = 0; start < n; start += opt.batch) {
            const std::size_t stop = std::min(start + opt.batch, n);
            std::vector<Matrix> grad;
            grad.reserve(m.layers.size());
            for (const auto& w : m.layers) grad.emplace_back(w.rows(), w.cols());

            for (std::size_t b = start; b < stop; ++b) {
                const std::size_t i = order[b];
                const int y = ds.labels[i];
                const auto xadv = pgd_attack(m, ds.example(i), y, attack, AttackLoss::cross_entropy);
                const ForwardTrace trace = mlp_forward_trace(m, xadv);
                const auto dscores = cross_entropy_grad(trace.pre.back(), y);
                const Gradients g = mlp_backward(m, trace, dscores, /*want_input_grad=*/false);
                for (std::size_t h = 0; h < grad.size(); ++h)
                    for (std::size_t idx = 0; idx < grad[h].size(); ++idx)
                        grad[h].data()[idx] += g.weights[h].data()[idx];
            }
            const double scale = opt.lr / static_cast<double>(stop - start);
            for (std::size_t h = 0; h < m.layers.size(); ++h)
                for (std::size_t idx = 0; idx < m.layers[h].size(); ++idx)
                    m.layers[h].data()[idx] -= scale * grad[h].data()[idx];
            soft_threshold_net(m, opt.lr * lambda);
        }
        const auto losses = epoch_losses(m, ds, attack, lambda);
        if (!std::isfinite(losses.adversarial) || !std::isfinite(losses.natural))
            throw DivergenceError("train_net: non-finite loss", epoch);
        result.natural_loss_trace.push_back(losses.natural);
        result.adversarial_loss_trace.push_back(losses.adversarial);
    }
    return result;
}

MlpMetrics eval_net(const MlpModel& m, const Dataset& ds, const AttackConfig& a, double gamma) {
    m.validate();
    ds.validate();
    a.validate();
    if (m.input_dim() != ds.d) throw InvalidConfigError("eval_net: model/dataset dim mismatch");
    if (m.output_dim() != ds.num_classes)
        throw InvalidConfigError("eval_net: model/dataset class count mismatch");

    MlpMetrics metrics{};
    metrics.gamma = gamma;
    double nat_err = 0.0, adv_err = 0.0, nat_ramp = 0.0, adv_ramp = 0.0;
    for (std::size_t i = 0; i < ds.size(); ++i) {
        const auto x = ds.example(i);
        const int y = ds.labels[i];
        const double nat_margin = margin(mlp_forward(m, x), y);
        const auto xadv = pgd_attack(m, x, y, a, AttackLoss::neg_margin);
        // Attacking the margin makes the adversarial margin a pointwise
        // lower bound of the natural one (x itself is a candidate).
        const double adv_margin = std::min(nat_margin, margin(mlp_forward(m, xadv), y));
        nat_err += nat_margin <= 0.0 ? 1.0 : 0.0;
        adv_err += adv_margin <= 0.0 ? 1.0 : 0.0;
        nat_ramp += ramp_loss(nat_margin, gamma);
        adv_ramp += ramp_loss(adv_margin, gamma);
    }
    const double inv_n = 1.0 / static_cast<double>(ds.size());
    metrics.natural_error = nat_err * inv_n;
    metrics.adversarial_error = adv_err * inv_n;
    metrics.natural_ramp = nat_ramp * inv_n;
    metrics.adversarial_ramp = adv_ramp * inv_n;
    for (const auto& w : m.layers) {
        LayerNorms norms{};
        norms.spectral = spectral_norm(w);
        norms.transpose_21 =
            group_norm_pq(w.transposed(), NormExponent::finite(2.0), NormExponent::finite(1.0));
        norms.entrywise_l1 = group_norm_pq(w, NormExponent::finite(1.0), NormExponent::finite(1.0));
        metrics.layer_norms.push_back(norms);
    }
    return metrics;
}

}  // namespace robustgen
