#pragma once

#include <span>
#include <vector>

#include "robustgen/data.hpp"
#include "robustgen/mlp.hpp"
#include "robustgen/numerics.hpp"

namespace robustgen {

// The structured symmetric matrix of the SDP relaxation for one-hidden-
// layer ReLU networks. Only the blocks coupling the last coordinate group
// are nonzero:
//   [ 0        0        1^T W^T diag(v) ]
//   [ 0        0        W^T diag(v)     ]
//   [ sym      sym      0               ]
// with W the d1 x d first-layer matrix and v a d1-vector.
struct QMatrix {
    Matrix m;  // (1 + d + d1) square, symmetric, zero diagonal blocks
    std::size_t input_dim = 0;   // d
    std::size_t hidden_dim = 0;  // d1

    std::size_t size() const { return m.rows(); }
};

QMatrix build_q(std::span<const double> v, const Matrix& w1);

struct SdpResult {
    double primal_value = 0.0;  // best feasible <Q,P> found (ascending)
    double dual_value = 0.0;    // certified upper bound N * max(lambda_max(Q), 0)
    double gap = 0.0;
    std::size_t iterations = 0;
    bool converged = false;
    Matrix primal_point;  // the feasible P achieving primal_value
};

struct SdpOptions {
    double tol = 1e-6;
    std::size_t max_iters = 500;
    double dykstra_tol = 1e-12;
    std::size_t dykstra_max_iters = 400;
};

// Solves max <Q,P> over P PSD with diag(P) <= 1 by projected gradient
// ascent from P = I, projecting with Dykstra's alternating method onto
// the intersection. The dual certificate is valid for any accuracy of
// the primal, so primal_value <= dual_value always holds.
SdpResult sdp_solve(const Matrix& q, const SdpOptions& opts = {});
SdpResult sdp_solve(const QMatrix& q, const SdpOptions& opts = {});

// Projection onto {PSD} cap {diag <= 1} (Dykstra).
Matrix project_psd_diag_cap(const Matrix& g, double tol = 1e-12, std::size_t max_iters = 400);

// Per-model cache of the 2K SDP solves entering the surrogate loss: one
// solve per output class k and sign z. The shift applied to margins is
// (epsilon/2) * s_star where s_star maximizes the certified dual values;
// using duals keeps the surrogate an upper bound of the true adversarial
// loss even when the primal solver is inexact.
class SurrogateEvaluator {
public:
    SurrogateEvaluator(const MlpModel& model, const SdpOptions& opts = {});

    double s_star() const { return s_star_; }
    const std::vector<SdpResult>& solves() const { return solves_; }  // order: (k=1,z=+),(k=1,z=-),...

    double shift(double epsilon) const { return 0.5 * epsilon * s_star_; }

    // phi_gamma( M(f(x), y) - (epsilon/2) s_star )
    double loss(std::span<const double> x, int y, double epsilon, double gamma) const;

    // The margin-threshold indicator of the generalization bound's
    // empirical term: M(f(x), y) <= gamma + (epsilon/2) s_star.
    bool threshold_indicator(std::span<const double> x, int y, double epsilon, double gamma) const;

    const MlpModel& model() const { return model_; }

private:
    MlpModel model_;
    double s_star_;
    std::vector<SdpResult> solves_;
};

// One-shot convenience wrappers (each builds the per-model cache).
double surrogate_loss(const MlpModel& m, std::span<const double> x, int y, double epsilon,
                      double gamma);

struct SurrogateRisk {
    double ramp_mean;       // mean surrogate loss
    double indicator_mean;  // mean threshold indicator
};
SurrogateRisk surrogate_risk(const MlpModel& m, const Dataset& ds, double epsilon, double gamma);
SurrogateRisk surrogate_risk(const SurrogateEvaluator& eval, const Dataset& ds, double epsilon,
                             double gamma);

}  // namespace robustgen
