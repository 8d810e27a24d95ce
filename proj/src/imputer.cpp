#include "ssid/imputer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>

#include "ssid/detail/linalg.hpp"
#include "ssid/errors.hpp"
#include "ssid/optim.hpp"

namespace ssid {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Workspace {
    const Dataset* data = nullptr;
    int tf = 0;
    std::vector<int> obs_idx;
    std::vector<std::int64_t> obs_times;
    Eigen::VectorXd y_obs;
    std::vector<Eigen::MatrixXd> w_obs;  // one lag-window block per input channel
};

Workspace make_workspace(const Dataset& data, int tf) {
    data.validate();
    Workspace ws;
    ws.data = &data;
    ws.tf = tf;
    ws.obs_idx = data.observed_indices();
    if (ws.obs_idx.empty()) throw std::invalid_argument("imputer: no observed samples");
    ws.obs_times = data.observed_times();
    ws.y_obs.resize(static_cast<Eigen::Index>(ws.obs_idx.size()));
    for (std::size_t i = 0; i < ws.obs_idx.size(); ++i) ws.y_obs[i] = data.outputs[ws.obs_idx[i]];
    ws.w_obs.reserve(data.num_inputs());
    for (int l = 0; l < data.num_inputs(); ++l)
        ws.w_obs.push_back(detail::lag_window_matrix(data.inputs.row(l).transpose(),
                                                     data.times.front(), ws.obs_times, 0, tf));
    return ws;
}

/// Memoized stationary covariance of the disturbance at integer lags.
class RbfLagTable {
public:
    explicit RbfLagTable(const KernelSpec& spec) : spec_(spec) {}
    double operator()(std::int64_t lag) {
        const std::int64_t key = std::llabs(lag);
        auto it = cache_.find(key);
        if (it != cache_.end()) return it->second;
        const double v = enriched_rbf_h(key, spec_);
        cache_.emplace(key, v);
        return v;
    }

private:
    KernelSpec spec_;
    std::map<std::int64_t, double> cache_;
};

Eigen::MatrixXd rbf_gram_from_table(RbfLagTable& h, std::span<const std::int64_t> rows,
                                    std::span<const std::int64_t> cols) {
    Eigen::MatrixXd m(rows.size(), cols.size());
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = h(rows[i] - cols[j]);
    return m;
}

/// P + R over the observed samples for one kernel configuration.
Eigen::MatrixXd observed_gram(const Workspace& ws, const KernelSpec& kernel, RbfLagTable& h,
                              Eigen::MatrixXd* l_factor_out) {
    Eigen::MatrixXd m = rbf_gram_from_table(h, ws.obs_times, ws.obs_times);
    if (!ws.w_obs.empty()) {
        const Eigen::MatrixXd l_factor = detail::psd_sqrt(truncated_kernel_gram(kernel));
        for (const auto& w : ws.w_obs) {
            const Eigen::MatrixXd a = w * l_factor;
            m.selfadjointView<Eigen::Lower>().rankUpdate(a, 1.0);
        }
        m = Eigen::MatrixXd(m.selfadjointView<Eigen::Lower>());
        if (l_factor_out) *l_factor_out = l_factor;
    }
    return m;
}

struct ProfiledObjective {
    double j_value = kInf;
    double lambda_star = 0.0;
};

ProfiledObjective profiled_objective(const Workspace& ws, const KernelSpec& kernel) {
    RbfLagTable h(kernel);
    const Eigen::MatrixXd m = observed_gram(ws, kernel, h, nullptr);
    const auto chol = detail::factor_spd(m);
    const double n = static_cast<double>(ws.y_obs.size());
    const double quad = ws.y_obs.dot(chol.llt.solve(ws.y_obs));
    if (!(quad > 0.0) || !std::isfinite(quad))
        throw std::invalid_argument("marginal_likelihood: observed outputs are degenerate");
    ProfiledObjective out;
    out.lambda_star = quad / n;
    out.j_value = n + n * std::log(out.lambda_star) + chol.logdet;
    return out;
}

std::pair<double, double> triangle_clamp(double phi, double varphi, double margin) {
    const double v = std::clamp(varphi, -1.0 + margin, 1.0 - margin);
    const double limit = 1.0 + v - margin;
    return {std::clamp(phi, -limit, limit), v};
}

} // namespace

void Hyperparameters::validate() const {
    if (!(beta > 0.0)) throw std::invalid_argument("Hyperparameters: beta must be positive");
    if (!(lambda > 0.0)) throw std::invalid_argument("Hyperparameters: lambda must be positive");
    if (order_q != 1 && order_q != 2)
        throw std::invalid_argument("Hyperparameters: order_q must be 1 or 2");
    if (enrichment && !inside_stability_triangle(enrichment->phi, enrichment->varphi))
        throw std::invalid_argument("Hyperparameters: enrichment outside the stability triangle");
}

KernelSpec effective_kernel(const KernelSpec& family, const Hyperparameters& hp) {
    hp.validate();
    KernelSpec k = family;
    k.order_q = hp.order_q;
    k.beta = hp.beta;
    k.enrichment = hp.enrichment;
    k.validate();
    return k;
}

Eigen::MatrixXd output_kernel_matrix(const Dataset& data,
                                     std::span<const std::int64_t> obs_times,
                                     std::span<const std::int64_t> eval_times,
                                     const KernelSpec& spec) {
    data.validate();
    spec.validate();
    Eigen::MatrixXd p = Eigen::MatrixXd::Zero(eval_times.size(), obs_times.size());
    if (data.num_inputs() == 0) return p;
    const Eigen::MatrixXd l_factor = detail::psd_sqrt(truncated_kernel_gram(spec));
    for (int l = 0; l < data.num_inputs(); ++l) {
        const Eigen::MatrixXd w_obs = detail::lag_window_matrix(
            data.inputs.row(l).transpose(), data.times.front(), obs_times, 0, spec.truncation_len);
        const Eigen::MatrixXd w_eval = detail::lag_window_matrix(
            data.inputs.row(l).transpose(), data.times.front(), eval_times, 0, spec.truncation_len);
        p.noalias() += (w_eval * l_factor) * (w_obs * l_factor).transpose();
    }
    return p;
}

ImputationResult impute(const Dataset& data, std::span<const std::int64_t> targets,
                        const Hyperparameters& hp, const KernelSpec& family) {
    const KernelSpec kernel = effective_kernel(family, hp);
    Workspace ws = make_workspace(data, kernel.truncation_len);
    RbfLagTable h(kernel);

    Eigen::MatrixXd l_factor;
    const Eigen::MatrixXd m = observed_gram(ws, kernel, h, &l_factor);
    const auto chol = detail::factor_spd(m);
    const Eigen::VectorXd coeff = chol.llt.solve(ws.y_obs);

    ImputationResult result;
    result.coefficients = coeff;
    result.fitted = hp;
    result.condition_estimate = chol.condition;
    const double quad = ws.y_obs.dot(coeff);
    result.log_objective = quad / hp.lambda +
                           static_cast<double>(ws.y_obs.size()) * std::log(hp.lambda) + chol.logdet;

    if (targets.empty()) return result;

    // cross-covariance rows a_t = P(t, t_i) + R(t, t_i)
    Eigen::MatrixXd cross = rbf_gram_from_table(h, targets, ws.obs_times);
    Eigen::VectorXd prior_diag =
        Eigen::VectorXd::Constant(static_cast<Eigen::Index>(targets.size()), h(0));
    if (!ws.w_obs.empty()) {
        std::vector<Eigen::MatrixXd> a_obs(ws.w_obs.size());
        for (std::size_t l = 0; l < ws.w_obs.size(); ++l) a_obs[l] = ws.w_obs[l] * l_factor;
        for (int l = 0; l < data.num_inputs(); ++l) {
            const Eigen::MatrixXd w_eval = detail::lag_window_matrix(
                data.inputs.row(l).transpose(), data.times.front(), targets, 0, kernel.truncation_len);
            const Eigen::MatrixXd a_eval = w_eval * l_factor;
            cross.noalias() += a_eval * a_obs[l].transpose();
            prior_diag += a_eval.rowwise().squaredNorm();
        }
    }

    const Eigen::MatrixXd solved = chol.llt.solve(cross.transpose());  // n_obs x n_targets
    result.estimates.reserve(targets.size());
    for (Eigen::Index t = 0; t < cross.rows(); ++t) {
        TimeEstimate e;
        e.time = static_cast<double>(targets[t]);
        e.value = cross.row(t).dot(coeff);
        e.variance = hp.lambda * (prior_diag[t] - cross.row(t).dot(solved.col(t)));
        result.estimates.push_back(e);
    }
    return result;
}

std::pair<double, double> marginal_likelihood(const Dataset& data, const Hyperparameters& shape,
                                              const KernelSpec& family) {
    const KernelSpec kernel = effective_kernel(family, shape);
    Workspace ws = make_workspace(data, kernel.truncation_len);
    const auto obj = profiled_objective(ws, kernel);
    return {obj.j_value, obj.lambda_star};
}

Hyperparameters optimize_hyperparameters(const Dataset& data, const KernelSpec& family,
                                         const SearchConfig& search) {
    family.validate();
    if (!(search.beta_min > 0.0) || !(search.beta_max > search.beta_min))
        throw std::invalid_argument("optimize_hyperparameters: invalid beta range");
    if (search.beta_grid < 1 || search.pole_grid < 1)
        throw std::invalid_argument("optimize_hyperparameters: invalid grid sizes");

    Workspace ws = make_workspace(data, family.truncation_len);
    const bool enriched = family.enrichment.has_value();

    struct Best {
        double j = kInf;
        double beta = 0.0;
        std::optional<Enrichment> enr;
        double lambda = 0.0;
    } best;

    auto eval_point = [&](double beta, std::optional<Enrichment> enr) -> double {
        KernelSpec k = family;
        k.beta = beta;
        k.enrichment = enr;
        double j = kInf;
        try {
            const auto obj = profiled_objective(ws, k);
            j = obj.j_value;
            if (j < best.j) best = Best{j, beta, enr, obj.lambda_star};
        } catch (const IllConditionedError&) {
        } catch (const std::invalid_argument&) {
        }
        return j;
    };

    // coarse grid over beta (log-spaced) and, for the enriched family, the
    // stability triangle shrunk by the configured margin
    const int nb = search.beta_grid;
    const double log_lo = std::log(search.beta_min);
    const double log_hi = std::log(search.beta_max);
    std::vector<double> betas(nb);
    for (int i = 0; i < nb; ++i)
        betas[i] = std::exp(nb == 1 ? log_lo : log_lo + (log_hi - log_lo) * i / (nb - 1.0));

    if (!enriched) {
        for (double b : betas) eval_point(b, std::nullopt);
    } else {
        const int np = search.pole_grid;
        const double margin = search.stability_margin;
        for (double b : betas) {
            for (int iv = 0; iv < np; ++iv) {
                const double varphi = np == 1 ? 0.0
                                              : -1.0 + margin +
                                                    (2.0 - 2.0 * margin) * iv / (np - 1.0);
                const double limit = 1.0 + varphi - margin;
                for (int ip = 0; ip < np; ++ip) {
                    const double phi = np == 1 ? 0.0 : -limit + 2.0 * limit * ip / (np - 1.0);
                    eval_point(b, Enrichment{phi, varphi});
                }
            }
        }
    }

    if (!std::isfinite(best.j))
        throw OptimizationError("optimize_hyperparameters: every grid point failed");

    // simplex refinement from the best grid point, in (log beta, phi, varphi)
    const double log_step = nb > 1 ? (log_hi - log_lo) / (nb - 1.0) : 0.5;
    auto project = [&](const std::vector<double>& x) {
        double beta = std::clamp(std::exp(x[0]), search.beta_min, search.beta_max);
        std::optional<Enrichment> enr;
        if (enriched) {
            const auto [phi, varphi] = triangle_clamp(x[1], x[2], search.stability_margin);
            enr = Enrichment{phi, varphi};
        }
        return std::make_pair(beta, enr);
    };

    std::vector<double> start{std::log(best.beta)};
    std::vector<double> steps{log_step};
    if (enriched) {
        start.push_back(best.enr->phi);
        start.push_back(best.enr->varphi);
        const double pole_step = search.pole_grid > 1 ? 2.0 / (search.pole_grid - 1.0) : 0.25;
        steps.push_back(pole_step);
        steps.push_back(pole_step);
    }
    if (search.refine_budget > 0) {
        nelder_mead(
            [&](const std::vector<double>& x) {
                const auto [beta, enr] = project(x);
                return eval_point(beta, enr);
            },
            start, steps, search.refine_budget, search.param_tol);
    }

    Hyperparameters hp;
    hp.beta = best.beta;
    hp.lambda = best.lambda;
    hp.enrichment = best.enr;
    hp.order_q = family.order_q;
    return hp;
}

ImputationResult stable_spline_imputation(const Dataset& data, const KernelSpec& family,
                                          const SearchConfig& search) {
    const Hyperparameters hp = optimize_hyperparameters(data, family, search);
    const auto targets = data.missing_times();
    return impute(data, targets, hp, family);
}

Dataset apply_imputation(const Dataset& data, const ImputationResult& result) {
    Dataset out = data;
    if (out.imputed.empty()) out.imputed.assign(out.n(), 0);
    std::map<std::int64_t, const TimeEstimate*> by_time;
    for (const auto& e : result.estimates)
        by_time[static_cast<std::int64_t>(std::llround(e.time))] = &e;
    for (int i = 0; i < out.n(); ++i) {
        if (!out.missing[i]) continue;
        auto it = by_time.find(out.times[i]);
        if (it == by_time.end()) continue;
        out.outputs[i] = it->second->value;
        out.missing[i] = 0;
        out.imputed[i] = 1;
    }
    return out;
}

ImputationResult impute_continuous(std::span<const double> times,
                                   std::span<const double> outputs,
                                   std::span<const double> targets,
                                   const Hyperparameters& hp) {
    hp.validate();
    if (hp.enrichment)
        throw std::invalid_argument("impute_continuous: enrichment is discrete-time only");
    if (times.size() != outputs.size())
        throw std::invalid_argument("impute_continuous: times/outputs size mismatch");
    if (times.empty()) throw std::invalid_argument("impute_continuous: need at least one sample");
    for (double t : times)
        if (t < 0.0) throw std::domain_error("impute_continuous: times must be nonnegative");

    KernelSpec k;
    k.order_q = hp.order_q;
    k.beta = hp.beta;
    k.truncation_len = 1;

    const Eigen::Index n = static_cast<Eigen::Index>(times.size());
    Eigen::MatrixXd m(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j) m(i, j) = rbf_h_continuous(times[i] - times[j], k);
    const auto chol = detail::factor_spd(m);

    Eigen::VectorXd y(n);
    for (Eigen::Index i = 0; i < n; ++i) y[i] = outputs[i];
    const Eigen::VectorXd coeff = chol.llt.solve(y);

    ImputationResult result;
    result.coefficients = coeff;
    result.fitted = hp;
    result.condition_estimate = chol.condition;
    const double quad = y.dot(coeff);
    result.log_objective =
        quad / hp.lambda + static_cast<double>(n) * std::log(hp.lambda) + chol.logdet;

    const double h0 = rbf_h_continuous(0.0, k);
    for (double t : targets) {
        Eigen::VectorXd a(n);
        for (Eigen::Index i = 0; i < n; ++i) a[i] = rbf_h_continuous(t - times[i], k);
        TimeEstimate e;
        e.time = t;
        e.value = a.dot(coeff);
        e.variance = hp.lambda * (h0 - a.dot(chol.llt.solve(a)));
        result.estimates.push_back(e);
    }
    return result;
}

} // namespace ssid
