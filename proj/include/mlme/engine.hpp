// Copyright 2026 The mlme Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef MLME_ENGINE_HPP
#define MLME_ENGINE_HPP

/// The reconstruction engine: joint maximum-likelihood / maximum-entropy
/// estimation by steepest ascent on the statistical-operator cone. Supports
/// complete measurements (group sum G = 1) and lossy ones (G < 1), where the
/// likelihood is normalized by the detection efficiency eta = tr(rho G).

#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <vector>

#include "mlme/measurement.hpp"
#include "mlme/operators.hpp"

namespace mlme {

enum class EngineMode {
    kAuto,          ///< lossy iff the POM group sum differs from the identity
    kForcePerfect,  ///< apply complete-measurement formulas regardless of G
    kForceLossy,    ///< apply lossy formulas regardless of G
};

struct EngineConfig {
    double lambda = 1e-3;              ///< entropy weight
    double epsilon = 0.1;              ///< steepest-ascent step size
    long long max_iterations = 50000;
    double gradient_tolerance = 1e-8;  ///< threshold on ||rho r||_F
    double eigenvalue_floor = 1e-12;   ///< clip for log rho
    double step_shrink = 0.5;          ///< backtracking factor on objective decrease
    bool record_objective_trace = true;

    void validate() const {
        detail::require(lambda >= 0.0, "EngineConfig: lambda must be nonnegative");
        detail::require(epsilon > 0.0, "EngineConfig: epsilon must be positive");
        detail::require(max_iterations >= 1, "EngineConfig: max_iterations must be >= 1");
        detail::require(gradient_tolerance > 0.0, "EngineConfig: gradient_tolerance must be positive");
        detail::require(eigenvalue_floor > 0.0, "EngineConfig: eigenvalue_floor must be positive");
        detail::require(step_shrink > 0.0 && step_shrink < 1.0,
                        "EngineConfig: step_shrink must lie in (0, 1)");
    }
};

struct IterationState {
    DensityMatrix rho;
    double objective = 0.0;
    double gradient_norm = std::numeric_limits<double>::infinity();
    long long iteration = 0;
    double eta = 1.0;  ///< detection efficiency of the current iterate (1 in perfect mode)
};

struct ReconstructionReport {
    DensityMatrix estimator;
    bool converged = false;
    long long iterations_used = 0;
    double final_gradient_norm = 0.0;
    double final_log_likelihood = 0.0;
    double final_entropy = 0.0;
    double final_eta = 1.0;
    bool lossy_mode = false;
    long long floored_probability_count = 0;
    std::vector<double> objective_trace;
};

/// Normalized log-likelihood sum_j f_j log(p_j / eta). In the perfect case
/// eta must be 1 and this reduces to sum_j f_j log p_j. Returns -infinity
/// when the state assigns zero probability to an observed outcome.
inline double normalized_log_likelihood(const std::vector<double>& f,
                                        const std::vector<double>& p, double eta) {
    detail::require(f.size() == p.size(), "normalized_log_likelihood: length mismatch");
    detail::require(eta > 0.0, "normalized_log_likelihood: eta must be positive");
    double sum = 0.0;
    for (size_t j = 0; j < f.size(); ++j) {
        if (f[j] <= 0.0) continue;
        if (p[j] <= 0.0) return -std::numeric_limits<double>::infinity();
        sum += f[j] * std::log(p[j] / eta);
    }
    return sum;
}

/// Relative entropy S({f}|{p}) = sum_j f_j log(f_j / p_j); nonnegative, zero
/// iff f = p on the support of f.
inline double relative_entropy(const std::vector<double>& f, const std::vector<double>& p) {
    detail::require(f.size() == p.size(), "relative_entropy: length mismatch");
    double sum = 0.0;
    for (size_t j = 0; j < f.size(); ++j) {
        if (f[j] <= 0.0) continue;
        if (p[j] <= 0.0) return std::numeric_limits<double>::infinity();
        sum += f[j] * std::log(f[j] / p[j]);
    }
    return sum;
}

namespace detail {

constexpr double kProbabilityFloor = 1e-14;

inline ComplexMatrix r_operator_matrix(const std::vector<double>& f, const std::vector<double>& p,
                                       const Pom& pom, long long* floored_count) {
    require(f.size() == p.size() && f.size() == static_cast<size_t>(pom.outcome_count()),
            "r_operator: length mismatch");
    ComplexMatrix r = ComplexMatrix::Zero(pom.dim(), pom.dim());
    for (size_t j = 0; j < f.size(); ++j) {
        if (f[j] <= 0.0) continue;  // 0/p terms are dropped
        double pj = p[j];
        if (pj < kProbabilityFloor) {
            pj = kProbabilityFloor;
            if (floored_count != nullptr) ++(*floored_count);
        }
        r += (f[j] / pj) * pom.effects()[j].op.matrix();
    }
    return r;
}

}  // namespace detail

/// R = sum_j (f_j / p_j) Pi_j. Terms with f_j = 0 are skipped; divisions are
/// guarded by a 1e-14 probability floor, counted in `floored_count` when a
/// counter is supplied.
inline HermitianOperator r_operator(const std::vector<double>& f, const std::vector<double>& p,
                                    const Pom& pom, long long* floored_count = nullptr) {
    return HermitianOperator(detail::r_operator_matrix(f, p, pom, floored_count));
}

namespace detail {

struct EngineEvaluation {
    std::vector<double> p;
    double eta = 1.0;
    double entropy = 0.0;
    double log_likelihood = 0.0;
    double objective = 0.0;
    SpectralDecomposition spectral;
};

inline bool resolve_lossy(const Pom& pom, EngineMode mode) {
    switch (mode) {
        case EngineMode::kForcePerfect: return false;
        case EngineMode::kForceLossy: return true;
        case EngineMode::kAuto: default: return !pom.complete();
    }
}

inline EngineEvaluation evaluate_iterate(const DensityMatrix& rho, const std::vector<double>& f,
                                         const Pom& pom, const EngineConfig& config, bool lossy) {
    EngineEvaluation eval;
    eval.p = probabilities(rho, pom);
    if (lossy) {
        double eta = 0.0;
        for (double v : eval.p) eta += v;
        if (eta <= 1e-12) {
            throw std::runtime_error("engine: degenerate detection, eta <= 1e-12 at an iterate");
        }
        eval.eta = eta;
    } else {
        eval.eta = 1.0;
    }
    eval.spectral = spectral_decompose_impl(rho.matrix());
    eval.entropy = 0.0;
    for (Eigen::Index i = 0; i < eval.spectral.eigenvalues.size(); ++i) {
        const double lam = eval.spectral.eigenvalues[i];
        if (lam > 0.0) eval.entropy -= lam * std::log(lam);
    }
    eval.log_likelihood = normalized_log_likelihood(f, eval.p, eval.eta);
    eval.objective = config.lambda * eval.entropy + eval.log_likelihood;
    return eval;
}

/// The gradient-like operator. Perfect: r = R - 1 - lambda(log rho - tr rho log rho).
/// Lossy: r = R - G/eta - lambda(log rho - tr rho log rho), with R built from
/// the lossy effects and probabilities.
inline ComplexMatrix script_r_matrix(const DensityMatrix& rho, const std::vector<double>& f,
                                     const Pom& pom, const EngineConfig& config, bool lossy,
                                     const EngineEvaluation& eval, long long* floored_count) {
    ComplexMatrix r = r_operator_matrix(f, eval.p, pom, floored_count);
    if (lossy) {
        r -= pom.group_sum() / eval.eta;
    } else {
        r -= ComplexMatrix::Identity(pom.dim(), pom.dim());
    }
    if (config.lambda > 0.0) {
        const ComplexMatrix log_rho =
            eval.spectral.apply([floor = config.eigenvalue_floor](double x) {
                return std::log(std::max(x, floor));
            });
        const double mean_log = trace_product_real(rho.matrix(), log_rho);
        r -= config.lambda * (log_rho - mean_log * ComplexMatrix::Identity(pom.dim(), pom.dim()));
    }
    return 0.5 * (r + r.adjoint().eval());
}

}  // namespace detail

/// Assemble the extremal-equation operator r for a state; at an interior
/// optimum rho r = r rho = 0.
inline HermitianOperator script_r(const DensityMatrix& rho, const std::vector<double>& f,
                                  const Pom& pom, const EngineConfig& config,
                                  EngineMode mode = EngineMode::kAuto) {
    config.validate();
    const bool lossy = detail::resolve_lossy(pom, mode);
    const auto eval = detail::evaluate_iterate(rho, f, pom, config, lossy);
    return HermitianOperator(detail::script_r_matrix(rho, f, pom, config, lossy, eval, nullptr));
}

/// One steepest-ascent update rho -> (1 + eps r) rho (1 + eps r) / trace.
/// The congruence form preserves positivity; if the objective decreases the
/// step is retried with eps <- eps * step_shrink until it stops decreasing
/// or eps underflows (the state is then returned unchanged). The shrunk eps
/// applies to this step only.
inline IterationState mlme_step(const IterationState& state, const std::vector<double>& f,
                                const Pom& pom, const EngineConfig& config,
                                EngineMode mode = EngineMode::kAuto) {
    config.validate();
    const bool lossy = detail::resolve_lossy(pom, mode);
    const auto eval = detail::evaluate_iterate(state.rho, f, pom, config, lossy);
    const ComplexMatrix r = detail::script_r_matrix(state.rho, f, pom, config, lossy, eval, nullptr);

    const ComplexMatrix identity = ComplexMatrix::Identity(pom.dim(), pom.dim());
    double eps = config.epsilon;
    while (true) {
        const ComplexMatrix amplifier = identity + eps * r;
        const ComplexMatrix raw = amplifier * state.rho.matrix() * amplifier;
        const double norm = raw.trace().real();
        detail::require(norm > 0.0, "mlme_step: nonpositive normalization trace");
        const DensityMatrix candidate = DensityMatrix::normalized(raw);
        const auto cand_eval = detail::evaluate_iterate(candidate, f, pom, config, lossy);
        if (cand_eval.objective >= eval.objective - 1e-12) {
            IterationState next{candidate, cand_eval.objective, 0.0, state.iteration + 1,
                                cand_eval.eta};
            const ComplexMatrix next_r =
                detail::script_r_matrix(candidate, f, pom, config, lossy, cand_eval, nullptr);
            next.gradient_norm = (candidate.matrix() * next_r).norm();
            return next;
        }
        eps *= config.step_shrink;
        if (eps < 1e-16) {
            IterationState unchanged = state;
            unchanged.objective = eval.objective;
            unchanged.eta = eval.eta;
            return unchanged;  // no improving step at this scale
        }
    }
}

/// Full reconstruction: start from the maximally mixed state and iterate the
/// steepest-ascent map until ||rho r||_F falls below the tolerance or the
/// iteration budget runs out. Non-convergence is reported, not thrown.
/// `observer`, when given, sees every accepted iterate (including the start).
inline ReconstructionReport reconstruct(
    const Dataset& data, const Pom& pom, const EngineConfig& config = {},
    EngineMode mode = EngineMode::kAuto,
    const std::function<void(const IterationState&)>& observer = nullptr) {
    config.validate();
    detail::require(!data.counts.empty(), "reconstruct: empty dataset");
    detail::require(data.counts.size() == static_cast<size_t>(pom.outcome_count()),
                    "reconstruct: dataset length does not match POM outcome count");
    const std::vector<double> f = frequencies(data);
    const bool lossy = detail::resolve_lossy(pom, mode);

    const Eigen::Index dim = pom.dim();
    const ComplexMatrix identity = ComplexMatrix::Identity(dim, dim);
    DensityMatrix rho = DensityMatrix::normalized(identity);

    long long floored = 0;
    auto eval = detail::evaluate_iterate(rho, f, pom, config, lossy);

    ReconstructionReport report{rho};
    if (config.record_objective_trace) report.objective_trace.push_back(eval.objective);
    if (observer) observer(IterationState{rho, eval.objective, 0.0, 0, eval.eta});

    bool converged = false;
    long long iteration = 0;
    double gradient_norm = std::numeric_limits<double>::infinity();
    while (iteration < config.max_iterations) {
        const ComplexMatrix r =
            detail::script_r_matrix(rho, f, pom, config, lossy, eval, &floored);
        gradient_norm = (rho.matrix() * r).norm();
        if (gradient_norm <= config.gradient_tolerance) {
            converged = true;
            break;
        }

        // Backtracking line search on the ascent objective.
        double eps = config.epsilon;
        bool accepted = false;
        while (eps >= 1e-16) {
            const ComplexMatrix amplifier = identity + eps * r;
            const ComplexMatrix raw = amplifier * rho.matrix() * amplifier;
            if (raw.trace().real() <= 0.0) {
                eps *= config.step_shrink;
                continue;
            }
            DensityMatrix candidate = DensityMatrix::normalized(raw);
            auto cand_eval = detail::evaluate_iterate(candidate, f, pom, config, lossy);
            if (std::isnan(cand_eval.objective) ||
                cand_eval.objective < eval.objective - 1e-12) {
                eps *= config.step_shrink;
                continue;
            }
            rho = std::move(candidate);
            eval = std::move(cand_eval);
            accepted = true;
            break;
        }
        ++iteration;
        if (!accepted) break;  // stalled at floating-point resolution

        if (config.record_objective_trace) report.objective_trace.push_back(eval.objective);
        if (observer) observer(IterationState{rho, eval.objective, gradient_norm, iteration, eval.eta});
    }

    if (!converged) {
        // Either the budget ran out or the line search stalled; re-measure the
        // gradient at the final iterate for the report.
        const ComplexMatrix r = detail::script_r_matrix(rho, f, pom, config, lossy, eval, nullptr);
        gradient_norm = (rho.matrix() * r).norm();
        converged = gradient_norm <= config.gradient_tolerance;
    }

    report.estimator = rho;
    report.converged = converged;
    report.iterations_used = iteration;
    report.final_gradient_norm = gradient_norm;
    report.final_log_likelihood = eval.log_likelihood;
    report.final_entropy = eval.entropy;
    report.final_eta = eval.eta;
    report.lossy_mode = lossy;
    report.floored_probability_count = floored;
    return report;
}

struct LambdaSweepPoint {
    double lambda = 0.0;
    double final_entropy = 0.0;
    double final_log_likelihood = 0.0;
    bool converged = false;
};

/// One reconstruction per entropy weight; output sorted by lambda ascending.
inline std::vector<LambdaSweepPoint> lambda_sweep(const Dataset& data, const Pom& pom,
                                                  const EngineConfig& base_config,
                                                  std::vector<double> lambda_list,
                                                  EngineMode mode = EngineMode::kAuto) {
    detail::require(!lambda_list.empty(), "lambda_sweep: empty lambda list");
    std::sort(lambda_list.begin(), lambda_list.end());
    std::vector<LambdaSweepPoint> out;
    out.reserve(lambda_list.size());
    for (double lambda : lambda_list) {
        EngineConfig config = base_config;
        config.lambda = lambda;
        config.record_objective_trace = false;
        const auto report = reconstruct(data, pom, config, mode);
        out.push_back({lambda, report.final_entropy, report.final_log_likelihood,
                       report.converged});
    }
    return out;
}

}  // namespace mlme

#endif  // MLME_ENGINE_HPP
