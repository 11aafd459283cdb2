#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "robustgen/data.hpp"
#include "robustgen/numerics.hpp"

namespace robustgen {

// lp-ball constraint on each weight row. When enforced, training projects
// every row onto {||w||_p <= bound} after each step.
struct NormConstraint {
    NormExponent p = NormExponent::finite(2.0);
    double bound = 1.0;
    bool enforced = false;
};

// Multi-class linear classifier, scores = W x. A single row with labels
// encoded +/-1 covers the binary case.
struct LinearModel {
    Matrix weights;  // K x d
    NormConstraint constraint;

    std::size_t num_classes() const { return weights.rows(); }
    std::size_t dim() const { return weights.cols(); }

    std::vector<double> scores(std::span<const double> x) const { return matvec(weights, x); }
    double max_row_norm(const NormExponent& p) const;
};

struct TrainConfig {
    double epsilon = 0.0;  // l_inf attack budget during training
    double lambda = 0.0;   // l1 regularization coefficient
    double lr = 0.1;
    std::size_t batch = 64;
    std::size_t epochs = 100;
    std::uint64_t seed = 0;

    void validate() const;
};

// Worst-case value of y<w, x'> over the l_inf ball: y<w,x> - eps*||w||_1.
double binary_adv_value(std::span<const double> w, std::span<const double> x, int y,
                        double epsilon);

// The minimizer x' = x - eps*y*sgn(w) (sgn(0) = 0); achieves
// binary_adv_value exactly.
std::vector<double> binary_adv_example(std::span<const double> w, std::span<const double> x, int y,
                                       double epsilon);

struct AdvMargin {
    double value;      // min over y' != y of (w_y - w_y')^T x - eps*||w_y - w_y'||_1
    int argmin_class;  // achieving y', 1-based; ties break to the smallest index
};

// Exact worst-case multi-class margin over the l_inf ball.
AdvMargin multiclass_adv_margin(const Matrix& weights, std::span<const double> x, int y,
                                double epsilon);

// x' = x - eps*sgn(w_y - w_{y*}) with y* the margin-minimizing class;
// attains the adversarial margin and stays inside the ball.
std::vector<double> multiclass_adv_example(const Matrix& weights, std::span<const double> x, int y,
                                           double epsilon);

struct LinearTrainResult {
    LinearModel model;
    std::vector<double> loss_trace;  // adversarial objective per epoch (index 0 = before training)
};

// Adversarial training of the l1-regularized cross-entropy objective:
// each step perturbs the batch with multiclass_adv_example, takes an SGD
// step on cross-entropy at the perturbed points, then soft-thresholds W.
LinearTrainResult train_linear(const Dataset& ds, const TrainConfig& cfg,
                               const NormConstraint& constraint = {});

struct LinearMetrics {
    double natural_error;       // 0-1
    double adversarial_error;   // 0-1, exact via the closed-form margin
    double natural_ramp;        // mean ramp loss at gamma
    double adversarial_ramp;
    double gamma;
    std::vector<double> row_l1_norms;
    std::vector<double> row_lp_norms;  // for the model's constraint exponent
};

LinearMetrics eval_linear(const LinearModel& model, const Dataset& ds, double epsilon,
                          double gamma = 1.0);

// Shared pieces also used by the network module.
double ramp_loss(double t, double gamma);
double margin(std::span<const double> scores, int y);
double cross_entropy(std::span<const double> scores, int y);
std::vector<double> softmax(std::span<const double> scores);

// Projection of v onto the lp ball of the given radius (p in {1, 2, inf}
// or any finite p>=1; general finite p falls back to bisection on the
// Lagrange multiplier).
void project_lp_ball(std::span<double> v, const NormExponent& p, double radius);

}  // namespace robustgen
