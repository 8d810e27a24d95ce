#include "ssid/identify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include <Eigen/Eigenvalues>

#include "ssid/detail/linalg.hpp"
#include "ssid/errors.hpp"
#include "ssid/optim.hpp"

namespace ssid {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct RegressionProblem {
    Eigen::VectorXd y;
    std::vector<Eigen::MatrixXd> windows;  // one n x T block per channel (inputs, then output)
    int coeff_len = 0;
};

RegressionProblem make_problem(const Dataset& data, int coeff_len, double imputed_weight) {
    data.validate();
    for (auto m : data.missing)
        if (m)
            throw std::invalid_argument(
                "fit_predictor: record has missing outputs (run the imputation first)");
    if (data.n() < 10) throw std::invalid_argument("fit_predictor: fewer than 10 rows");

    RegressionProblem prob;
    prob.coeff_len = coeff_len;
    prob.y = data.outputs;
    const std::span<const std::int64_t> times(data.times.data(), data.times.size());
    for (int l = 0; l < data.num_inputs(); ++l)
        prob.windows.push_back(detail::lag_window_matrix(data.inputs.row(l).transpose(),
                                                         data.times.front(), times, 1, coeff_len));
    prob.windows.push_back(
        detail::lag_window_matrix(data.outputs, data.times.front(), times, 1, coeff_len));

    if (imputed_weight != 1.0 && !data.imputed.empty()) {
        if (!(imputed_weight >= 0.0))
            throw std::invalid_argument("fit_predictor: imputed_weight must be nonnegative");
        const double s = std::sqrt(imputed_weight);
        for (int i = 0; i < data.n(); ++i) {
            if (!data.imputed[i]) continue;
            prob.y[i] *= s;
            for (auto& w : prob.windows) w.row(i) *= s;
        }
    }
    return prob;
}

/// Marginal likelihood pieces for one kernel shape, with the scale
/// profiled by an inner one-dimensional search over the eigenvalues of
/// the regression Gram (the smaller of Z^T Z and Z Z^T is decomposed).
struct ShapeEval {
    Eigen::VectorXd eigs;     // nonnegative
    Eigen::VectorXd weights;  // squared data coordinates
    double offset = 0.0;      // contribution of directions outside the span
    Eigen::MatrixXd z;        // n x m regressor factor
    Eigen::MatrixXd basis;    // eigenvectors (of Z^T Z or Z Z^T)
    bool feature_route = false;
    Eigen::MatrixXd l_factor;

    double objective(double lambda) const {
        double j = offset;
        for (Eigen::Index i = 0; i < eigs.size(); ++i) {
            const double denom = 1.0 + lambda * eigs[i];
            j += weights[i] / denom + std::log(denom);
        }
        return j;
    }
};

ShapeEval evaluate_shape(const RegressionProblem& prob, const KernelSpec& kernel) {
    ShapeEval ev;
    ev.l_factor = detail::psd_sqrt(truncated_kernel_gram(kernel));
    const int t_len = prob.coeff_len;
    const int channels = static_cast<int>(prob.windows.size());
    const Eigen::Index n = prob.y.size();
    const Eigen::Index m = static_cast<Eigen::Index>(channels) * t_len;

    ev.z.resize(n, m);
    for (int c = 0; c < channels; ++c)
        ev.z.middleCols(static_cast<Eigen::Index>(c) * t_len, t_len).noalias() =
            prob.windows[c] * ev.l_factor;

    ev.feature_route = m <= n;
    if (ev.feature_route) {
        Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(m, m);
        gram.selfadjointView<Eigen::Lower>().rankUpdate(ev.z.transpose(), 1.0);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(
            Eigen::MatrixXd(gram.selfadjointView<Eigen::Lower>()));
        ev.eigs = es.eigenvalues().cwiseMax(0.0);
        ev.basis = es.eigenvectors();
        const Eigen::VectorXd t = ev.z.transpose() * prob.y;
        const Eigen::VectorXd s = ev.basis.transpose() * t;
        // J(lambda) = y'y - lambda sum s_i^2/(1+lambda d_i) + sum log(1+lambda d_i)
        //           = y'y - sum s_i^2 d_i^+ ... rewritten below with weights
        // Use: lambda s^2/(1+lambda d) = (s^2/d) - (s^2/d)/(1+lambda d) for d>0.
        ev.weights.resize(ev.eigs.size());
        double constant = prob.y.squaredNorm();
        for (Eigen::Index i = 0; i < ev.eigs.size(); ++i) {
            if (ev.eigs[i] > 0.0) {
                const double r = s[i] * s[i] / ev.eigs[i];
                constant -= r;
                ev.weights[i] = r;
            } else {
                ev.weights[i] = 0.0;
            }
        }
        ev.offset = constant;
    } else {
        Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(n, n);
        gram.selfadjointView<Eigen::Lower>().rankUpdate(ev.z, 1.0);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(
            Eigen::MatrixXd(gram.selfadjointView<Eigen::Lower>()));
        ev.eigs = es.eigenvalues().cwiseMax(0.0);
        ev.basis = es.eigenvectors();
        const Eigen::VectorXd w = ev.basis.transpose() * prob.y;
        ev.weights = w.cwiseProduct(w);
        ev.offset = 0.0;
    }
    return ev;
}

double profile_lambda(const ShapeEval& ev, double lo, double hi, double* j_out) {
    // golden-section search on log lambda; J is smooth and unimodal in
    // practice, and the bracket is wide enough that endpoint minima mean
    // an effectively unregularized or fully shrunk fit.
    const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
    double a = std::log(lo);
    double b = std::log(hi);
    double x1 = b - gr * (b - a);
    double x2 = a + gr * (b - a);
    double f1 = ev.objective(std::exp(x1));
    double f2 = ev.objective(std::exp(x2));
    for (int it = 0; it < 90 && (b - a) > 1e-10; ++it) {
        if (f1 <= f2) {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - gr * (b - a);
            f1 = ev.objective(std::exp(x1));
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + gr * (b - a);
            f2 = ev.objective(std::exp(x2));
        }
    }
    const double x = f1 <= f2 ? x1 : x2;
    if (j_out) *j_out = std::min(f1, f2);
    return std::exp(x);
}

Eigen::VectorXd solve_coefficients(const ShapeEval& ev, const RegressionProblem& prob,
                                   double lambda) {
    // ghat = lambda L_blk Z^T (lambda Z Z^T + I)^{-1} y, via the stored
    // eigendecomposition of whichever Gram was formed.
    const Eigen::Index m = ev.z.cols();
    Eigen::VectorXd zt_solved(m);
    if (ev.feature_route) {
        const Eigen::VectorXd t = ev.z.transpose() * prob.y;
        const Eigen::VectorXd s = ev.basis.transpose() * t;
        Eigen::VectorXd scaled(s.size());
        for (Eigen::Index i = 0; i < s.size(); ++i) scaled[i] = s[i] / (1.0 + lambda * ev.eigs[i]);
        zt_solved = ev.basis * scaled;
    } else {
        const Eigen::VectorXd w = ev.basis.transpose() * prob.y;
        Eigen::VectorXd scaled(w.size());
        for (Eigen::Index i = 0; i < w.size(); ++i) scaled[i] = w[i] / (1.0 + lambda * ev.eigs[i]);
        zt_solved = ev.z.transpose() * (ev.basis * scaled);
    }
    const int t_len = prob.coeff_len;
    const int channels = static_cast<int>(prob.windows.size());
    Eigen::VectorXd g(static_cast<Eigen::Index>(channels) * t_len);
    for (int c = 0; c < channels; ++c)
        g.segment(static_cast<Eigen::Index>(c) * t_len, t_len).noalias() =
            lambda * (ev.l_factor * zt_solved.segment(static_cast<Eigen::Index>(c) * t_len, t_len));
    return g;
}

} // namespace

PredictorModel fit_predictor(const Dataset& data, const KernelSpec& family,
                             const SearchConfig& search, double imputed_weight) {
    family.validate();
    const RegressionProblem prob = make_problem(data, family.truncation_len, imputed_weight);
    const bool enriched = family.enrichment.has_value();

    struct Best {
        double j = kInf;
        double beta = 0.0;
        double lambda = 1.0;
        std::optional<Enrichment> enr;
    } best;

    auto eval_point = [&](double beta, std::optional<Enrichment> enr) -> double {
        KernelSpec k = family;
        k.beta = beta;
        k.enrichment = enr;
        try {
            const ShapeEval ev = evaluate_shape(prob, k);
            double j = kInf;
            const double lambda = profile_lambda(ev, search.lambda_min, search.lambda_max, &j);
            if (j < best.j) best = Best{j, beta, lambda, enr};
            return j;
        } catch (const std::exception&) {
            return kInf;
        }
    };

    const int nb = search.beta_grid;
    const double log_lo = std::log(search.beta_min);
    const double log_hi = std::log(search.beta_max);
    for (int i = 0; i < nb; ++i) {
        const double beta = std::exp(nb == 1 ? log_lo : log_lo + (log_hi - log_lo) * i / (nb - 1.0));
        if (!enriched) {
            eval_point(beta, std::nullopt);
            continue;
        }
        const int np = search.pole_grid;
        const double margin = search.stability_margin;
        for (int iv = 0; iv < np; ++iv) {
            const double varphi =
                np == 1 ? 0.0 : -1.0 + margin + (2.0 - 2.0 * margin) * iv / (np - 1.0);
            const double limit = 1.0 + varphi - margin;
            for (int ip = 0; ip < np; ++ip) {
                const double phi = np == 1 ? 0.0 : -limit + 2.0 * limit * ip / (np - 1.0);
                eval_point(beta, Enrichment{phi, varphi});
            }
        }
    }
    if (!std::isfinite(best.j)) throw OptimizationError("fit_predictor: every grid point failed");

    const double log_step = nb > 1 ? (log_hi - log_lo) / (nb - 1.0) : 0.5;
    std::vector<double> start{std::log(best.beta)};
    std::vector<double> steps{log_step};
    if (enriched) {
        start.insert(start.end(), {best.enr->phi, best.enr->varphi});
        const double pole_step = search.pole_grid > 1 ? 2.0 / (search.pole_grid - 1.0) : 0.25;
        steps.insert(steps.end(), {pole_step, pole_step});
    }
    if (search.refine_budget > 0) {
        nelder_mead(
            [&](const std::vector<double>& x) {
                const double beta = std::clamp(std::exp(x[0]), search.beta_min, search.beta_max);
                std::optional<Enrichment> enr;
                if (enriched) {
                    const double varphi = std::clamp(x[2], -1.0 + search.stability_margin,
                                                     1.0 - search.stability_margin);
                    const double limit = 1.0 + varphi - search.stability_margin;
                    enr = Enrichment{std::clamp(x[1], -limit, limit), varphi};
                }
                return eval_point(beta, enr);
            },
            start, steps, search.refine_budget, search.param_tol);
    }

    KernelSpec k = family;
    k.beta = best.beta;
    k.enrichment = best.enr;
    const ShapeEval ev = evaluate_shape(prob, k);
    const Eigen::VectorXd g = solve_coefficients(ev, prob, best.lambda);

    PredictorModel model;
    const int t_len = family.truncation_len;
    const int p_inputs = static_cast<int>(prob.windows.size()) - 1;
    model.g_inputs.resize(p_inputs, t_len);
    for (int l = 0; l < p_inputs; ++l)
        model.g_inputs.row(l) = g.segment(static_cast<Eigen::Index>(l) * t_len, t_len).transpose();
    model.g_output = g.segment(static_cast<Eigen::Index>(p_inputs) * t_len, t_len);
    model.hyperparameters.beta = best.beta;
    model.hyperparameters.lambda = best.lambda;
    model.hyperparameters.enrichment = best.enr;
    model.hyperparameters.order_q = family.order_q;
    return model;
}

PredictorModel fit_predictor_fixed(const Dataset& data, const KernelSpec& family,
                                   const Hyperparameters& hp, double imputed_weight) {
    family.validate();
    const RegressionProblem prob = make_problem(data, family.truncation_len, imputed_weight);
    const KernelSpec kernel = effective_kernel(family, hp);
    const ShapeEval ev = evaluate_shape(prob, kernel);
    const Eigen::VectorXd g = solve_coefficients(ev, prob, hp.lambda);

    PredictorModel model;
    const int t_len = family.truncation_len;
    const int p_inputs = static_cast<int>(prob.windows.size()) - 1;
    model.g_inputs.resize(p_inputs, t_len);
    for (int l = 0; l < p_inputs; ++l)
        model.g_inputs.row(l) = g.segment(static_cast<Eigen::Index>(l) * t_len, t_len).transpose();
    model.g_output = g.segment(static_cast<Eigen::Index>(p_inputs) * t_len, t_len);
    model.hyperparameters = hp;
    return model;
}

Eigen::MatrixXd kstep_predict_all(const PredictorModel& model, const Dataset& record, int k_max) {
    if (k_max < 1 || k_max > 20)
        throw std::invalid_argument("kstep_predict_all: horizon must lie in [1,20]");
    record.validate();
    for (auto m : record.missing)
        if (m) throw std::invalid_argument("kstep_predict_all: record must be fully observed");
    if (record.num_inputs() != model.g_inputs.rows())
        throw std::invalid_argument("kstep_predict_all: input channel count disagrees with model");

    const int n = record.n();
    const int t_len = model.coeff_len();

    // exogenous part does not depend on the prediction origin
    Eigen::VectorXd input_part = Eigen::VectorXd::Zero(n);
    for (int t = 0; t < n; ++t) {
        double v = 0.0;
        for (int l = 0; l < record.num_inputs(); ++l)
            for (int j = 1; j <= t_len && j <= t; ++j)
                v += model.g_inputs(l, j - 1) * record.inputs(l, t - j);
        input_part[t] = v;
    }

    Eigen::MatrixXd result(k_max, n);
    std::vector<double> horizon(static_cast<std::size_t>(k_max + 1), 0.0);
    for (int origin = -k_max; origin < n - 1; ++origin) {
        for (int j = 1; j <= k_max; ++j) {
            const int t = origin + j;
            if (t >= n) break;
            if (t < 0) continue;
            double v = input_part[t];
            for (int mm = 1; mm <= t_len; ++mm) {
                const int tau = t - mm;
                if (tau < 0) break;
                v += model.g_output[mm - 1] *
                     (tau <= origin ? record.outputs[tau] : horizon[tau - origin]);
            }
            horizon[j] = v;
            result(j - 1, t) = v;
        }
    }
    return result;
}

std::vector<double> kstep_predict(const PredictorModel& model, const Dataset& record, int k) {
    const Eigen::MatrixXd all = kstep_predict_all(model, record, k);
    std::vector<double> out(static_cast<std::size_t>(record.n()));
    for (int i = 0; i < record.n(); ++i) out[i] = all(k - 1, i);
    return out;
}

namespace {

double coefficient_of_determination(std::span<const double> truth, std::span<const double> est) {
    if (truth.size() != est.size() || truth.empty())
        throw std::invalid_argument("coefficient of determination: size mismatch or empty input");
    double mean = 0.0;
    for (double v : truth) mean += v;
    mean /= static_cast<double>(truth.size());
    double denom = 0.0;
    double err = 0.0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        denom += (truth[i] - mean) * (truth[i] - mean);
        err += (truth[i] - est[i]) * (truth[i] - est[i]);
    }
    if (!(denom > 0.0))
        throw std::invalid_argument("coefficient of determination: constant truth vector");
    return 1.0 - err / denom;
}

} // namespace

double cod_miss(std::span<const double> truth, std::span<const double> estimates) {
    return coefficient_of_determination(truth, estimates);
}

double cod_k(std::span<const double> test_truth, std::span<const double> predictions) {
    return coefficient_of_determination(test_truth, predictions);
}

} // namespace ssid
