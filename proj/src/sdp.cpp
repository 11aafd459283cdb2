#include "robustgen/sdp.hpp"

#include <algorithm>
#include <cmath>

#include "robustgen/errors.hpp"
#include "robustgen/linear.hpp"

namespace robustgen {

QMatrix build_q(std::span<const double> v, const Matrix& w1) {
    const std::size_t d1 = w1.rows();
    const std::size_t d = w1.cols();
    if (v.size() != d1) throw InvalidConfigError("build_q: v length must equal rows of W");

    QMatrix q;
    q.input_dim = d;
    q.hidden_dim = d1;
    const std::size_t n = 1 + d + d1;
    q.m = Matrix(n, n);

    // Column block (.,3): [ 1^T W^T diag(v) ; W^T diag(v) ], mirrored below.
    for (std::size_t h = 0; h < d1; ++h) {
        const double vh = v[h];
        if (vh == 0.0) continue;
        const auto wrow = w1.row(h);
        double colsum = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
            const double entry = wrow[j] * vh;
            colsum += entry;
            q.m(1 + j, 1 + d + h) = entry;
            q.m(1 + d + h, 1 + j) = entry;
        }
        q.m(0, 1 + d + h) = colsum;
        q.m(1 + d + h, 0) = colsum;
    }
    return q;
}

namespace {

double frob_inner(const Matrix& a, const Matrix& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a.data()[i] * b.data()[i];
    return s;
}

void check_symmetric(const Matrix& q) {
    if (q.rows() != q.cols()) throw InvalidConfigError("sdp_solve: Q must be square");
    double scale = 0.0;
    for (double x : q.data()) scale = std::max(scale, std::abs(x));
    for (std::size_t i = 0; i < q.rows(); ++i)
        for (std::size_t j = i + 1; j < q.cols(); ++j)
            if (std::abs(q(i, j) - q(j, i)) > 1e-10 * std::max(1.0, scale))
                throw InvalidConfigError("sdp_solve: Q must be symmetric");
}

}  // namespace

Matrix project_psd_diag_cap(const Matrix& g, double tol, std::size_t max_iters) {
    const std::size_t n = g.rows();
    Matrix x = g;
    Matrix p(n, n), q(n, n);
    double prev_change = std::numeric_limits<double>::infinity();
    for (std::size_t it = 0; it < max_iters; ++it) {
        // PSD half-step with correction p.
        Matrix gp = x;
        for (std::size_t i = 0; i < gp.size(); ++i) gp.data()[i] += p.data()[i];
        Matrix y = psd_project(gp);
        for (std::size_t i = 0; i < p.size(); ++i) p.data()[i] = gp.data()[i] - y.data()[i];

        // diag <= 1 half-step with correction q.
        Matrix gq = y;
        for (std::size_t i = 0; i < gq.size(); ++i) gq.data()[i] += q.data()[i];
        Matrix xn = gq;
        for (std::size_t i = 0; i < n; ++i) xn(i, i) = std::min(xn(i, i), 1.0);
        for (std::size_t i = 0; i < q.size(); ++i) q.data()[i] = gq.data()[i] - xn.data()[i];

        double change = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            const double dxi = xn.data()[i] - x.data()[i];
            change += dxi * dxi;
        }
        x = std::move(xn);
        change = std::sqrt(change);
        if (change <= tol && prev_change <= tol) break;
        prev_change = change;
    }
    return x;
}

SdpResult sdp_solve(const Matrix& q, const SdpOptions& opts) {
    check_symmetric(q);
    const std::size_t n = q.rows();
    SdpResult result;

    const auto eig = symmetric_eigen(q, /*want_vectors=*/false);
    double lmax = eig.eigenvalues.empty() ? 0.0 : eig.eigenvalues[0];
    double lmin = lmax;
    for (double l : eig.eigenvalues) {
        lmax = std::max(lmax, l);
        lmin = std::min(lmin, l);
    }
    // diag(c) - Q is PSD for c = max(lambda_max, 0) * 1 and c >= 0, so
    // <Q,P> <= sum(c) for every feasible P.
    result.dual_value = static_cast<double>(n) * std::max(lmax, 0.0);

    const double qnorm = std::max(std::abs(lmax), std::abs(lmin));
    if (qnorm == 0.0) {
        result.primal_point = Matrix::identity(n);
        result.converged = true;
        return result;
    }

    Matrix p = Matrix::identity(n);
    result.primal_point = p;
    result.primal_value = frob_inner(q, p);
    double best = result.primal_value;
    const double step = 1.0 / qnorm;

    double window_best = best;
    std::size_t window_start = 0;
    std::size_t it = 0;
    for (; it < opts.max_iters; ++it) {
        Matrix g = p;
        for (std::size_t i = 0; i < g.size(); ++i) g.data()[i] += step * q.data()[i];
        p = project_psd_diag_cap(g, opts.dykstra_tol, opts.dykstra_max_iters);
        const double value = frob_inner(q, p);
        if (value > best) {
            best = value;
            result.primal_point = p;
        }
        // Converged once the best value stalls for a stretch of iterates.
        if (it - window_start >= 20) {
            if (best - window_best <= opts.tol) {
                result.converged = true;
                ++it;
                break;
            }
            window_best = best;
            window_start = it;
        }
    }
    result.iterations = it;
    result.primal_value = best;
    result.gap = result.dual_value - result.primal_value;
    if (result.primal_value > result.dual_value + 1e-8)
        throw NumericalError("sdp_solve: primal exceeded the dual certificate");
    return result;
}

SdpResult sdp_solve(const QMatrix& q, const SdpOptions& opts) { return sdp_solve(q.m, opts); }

SurrogateEvaluator::SurrogateEvaluator(const MlpModel& model, const SdpOptions& opts)
    : model_(model) {
    model_.validate();
    if (model_.depth() != 2)
        throw InvalidConfigError("surrogate requires exactly one hidden layer (L = 2)");
    const Matrix& w1 = model_.layers[0];
    const Matrix& w2 = model_.layers[1];
    const std::size_t k = w2.rows();

    s_star_ = 0.0;
    solves_.reserve(2 * k);
    for (std::size_t c = 0; c < k; ++c) {
        const QMatrix q = build_q(w2.row(c), w1);
        for (const double z : {1.0, -1.0}) {
            Matrix zq = q.m;
            if (z < 0.0)
                for (double& x : zq.data()) x = -x;
            solves_.push_back(sdp_solve(zq, opts));
            s_star_ = std::max(s_star_, solves_.back().dual_value);
        }
    }
}

double SurrogateEvaluator::loss(std::span<const double> x, int y, double epsilon,
                                double gamma) const {
    if (epsilon < 0.0) throw InvalidConfigError("surrogate loss: epsilon must be >= 0");
    const double m = margin(mlp_forward(model_, x), y);
    return ramp_loss(m - shift(epsilon), gamma);
}

bool SurrogateEvaluator::threshold_indicator(std::span<const double> x, int y, double epsilon,
                                             double gamma) const {
    const double m = margin(mlp_forward(model_, x), y);
    return m <= gamma + shift(epsilon);
}

double surrogate_loss(const MlpModel& m, std::span<const double> x, int y, double epsilon,
                      double gamma) {
    return SurrogateEvaluator(m).loss(x, y, epsilon, gamma);
}

SurrogateRisk surrogate_risk(const SurrogateEvaluator& eval, const Dataset& ds, double epsilon,
                             double gamma) {
    SurrogateRisk risk{0.0, 0.0};
    for (std::size_t i = 0; i < ds.size(); ++i) {
        risk.ramp_mean += eval.loss(ds.example(i), ds.labels[i], epsilon, gamma);
        risk.indicator_mean +=
            eval.threshold_indicator(ds.example(i), ds.labels[i], epsilon, gamma) ? 1.0 : 0.0;
    }
    const double inv_n = 1.0 / static_cast<double>(ds.size());
    risk.ramp_mean *= inv_n;
    risk.indicator_mean *= inv_n;
    return risk;
}

SurrogateRisk surrogate_risk(const MlpModel& m, const Dataset& ds, double epsilon, double gamma) {
    return surrogate_risk(SurrogateEvaluator(m), ds, epsilon, gamma);
}

}  // namespace robustgen
