#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "robustgen/data.hpp"
#include "robustgen/linear.hpp"
#include "robustgen/numerics.hpp"

namespace robustgen {

// Fully-connected ReLU network without biases:
//   f(x) = W_L relu(W_{L-1} relu(... relu(W_1 x)))
// (no activation after the last layer).
struct MlpModel {
    std::vector<Matrix> layers;  // W_h is d_h x d_{h-1}

    std::size_t depth() const { return layers.size(); }
    std::size_t input_dim() const { return layers.front().cols(); }
    std::size_t output_dim() const { return layers.back().rows(); }

    // Throws InvalidConfigError if adjacent layer dimensions do not chain.
    void validate() const;
};

struct AttackConfig {
    double epsilon = 0.0;
    std::size_t steps = 40;
    double step_size = 0.0;  // 0 means the default 2.5 * epsilon / steps
    std::size_t restarts = 1;
    std::optional<std::pair<double, double>> clamp_domain;

    double effective_step() const;
    void validate() const;
};

enum class AttackLoss { cross_entropy, neg_margin };

struct MarginLossConfig {
    double gamma = 1.0;
};

// Forward pass; scores for each class.
std::vector<double> mlp_forward(const MlpModel& m, std::span<const double> x);

// Forward pass keeping pre-activations (needed by the backward pass).
struct ForwardTrace {
    std::vector<std::vector<double>> pre;   // pre[h] = W_{h+1} z_h, h = 0..L-1
    std::vector<std::vector<double>> post;  // post[0] = x, post[h] = relu(pre[h-1]) for h < L
};
ForwardTrace mlp_forward_trace(const MlpModel& m, std::span<const double> x);

// Gradients of a scalar loss whose score-space gradient is `dscores`.
// Returns per-layer weight gradients; optionally also d loss / d x.
struct Gradients {
    std::vector<Matrix> weights;
    std::vector<double> input;
};
Gradients mlp_backward(const MlpModel& m, const ForwardTrace& trace,
                       std::span<const double> dscores, bool want_input_grad);

// Score-space gradients of the two attack losses.
std::vector<double> cross_entropy_grad(std::span<const double> scores, int y);
std::vector<double> neg_margin_grad(std::span<const double> scores, int y);

double attack_loss_value(AttackLoss loss, std::span<const double> scores, int y);

// PGD in input space: iterated sign-gradient ascent projected back onto
// the epsilon-ball (and the clamp domain if set). Restart 0 starts at x;
// further restarts start uniformly inside the ball. Returns the iterate
// with the highest loss seen, which always includes x itself.
std::vector<double> pgd_attack(const MlpModel& m, std::span<const double> x, int y,
                               const AttackConfig& a, AttackLoss loss);

struct MlpTrainResult {
    MlpModel model;
    std::vector<double> natural_loss_trace;      // mean CE per epoch (index 0 = init)
    std::vector<double> adversarial_loss_trace;  // mean CE at PGD points + lambda*||W||_1
};

// Adversarial training: SGD on cross-entropy at PGD-perturbed inputs with
// l1 soft-thresholding of every layer after each step.
// `hidden` lists the hidden layer widths; input/output come from the data.
MlpTrainResult train_net(const Dataset& ds, const std::vector<std::size_t>& hidden,
                         const AttackConfig& attack, double lambda, const TrainConfig& opt);

struct LayerNorms {
    double spectral;       // ||W_h||_sigma
    double transpose_21;   // ||W_h^T||_{2,1}
    double entrywise_l1;   // ||W_h||_1
};

struct MlpMetrics {
    double natural_error;
    double adversarial_error;  // PGD lower bound; counts x itself as in the ball
    double natural_ramp;
    double adversarial_ramp;
    double gamma;
    std::vector<LayerNorms> layer_norms;
};

MlpMetrics eval_net(const MlpModel& m, const Dataset& ds, const AttackConfig& a, double gamma);

}  // namespace robustgen
