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

#ifndef MLME_MEASUREMENT_HPP
#define MLME_MEASUREMENT_HPP

/// Probability operator measurements (POMs): representation, validation,
/// outcome probabilities, detection efficiency, and data simulation for both
/// complete (G = 1) and lossy (G < 1) measurements.

#include <algorithm>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "mlme/operators.hpp"

namespace mlme {

/// One measurement outcome: a positive effect with a human-readable label.
struct Effect {
    HermitianOperator op;
    std::string label;

    Effect(HermitianOperator op_, std::string label_) : op(std::move(op_)), label(std::move(label_)) {}
};

/// An ordered list of positive effects sharing one dimension. The group sum
/// G = sum_j Pi_j may fall short of the identity, which models detection
/// losses; `complete()` reports whether ||G - 1||_F < 1e-8.
class Pom {
  public:
    static constexpr double kCompletenessTolerance = 1e-8;
    static constexpr double kEffectPositivityTolerance = 1e-8;

    Pom(std::vector<Effect> effects, Eigen::Index dim) : effects_(std::move(effects)), dim_(dim) {
        detail::require(dim_ >= 1, "Pom: dim must be >= 1");
        detail::require(!effects_.empty(), "Pom: effect list must be nonempty");
        group_sum_ = ComplexMatrix::Zero(dim_, dim_);
        for (const Effect& e : effects_) {
            detail::require(e.op.dim() == dim_, "Pom: effect dimension mismatch");
            group_sum_ += e.op.matrix();
        }
        const auto spectral = detail::spectral_decompose_impl(group_sum_);
        g_max_eigenvalue_ = spectral.eigenvalues[0];
        detail::require(g_max_eigenvalue_ <= 1.0 + 1e-9,
                        "Pom: group sum exceeds the identity (max eigenvalue " +
                            std::to_string(g_max_eigenvalue_) + ")");
        complete_ = (group_sum_ - ComplexMatrix::Identity(dim_, dim_)).norm() < kCompletenessTolerance;
    }

    Eigen::Index dim() const { return dim_; }
    Eigen::Index outcome_count() const { return static_cast<Eigen::Index>(effects_.size()); }
    const std::vector<Effect>& effects() const { return effects_; }
    const ComplexMatrix& group_sum() const { return group_sum_; }
    double g_max_eigenvalue() const { return g_max_eigenvalue_; }
    bool complete() const { return complete_; }

  private:
    std::vector<Effect> effects_;
    Eigen::Index dim_;
    ComplexMatrix group_sum_;
    double g_max_eigenvalue_ = 0.0;
    bool complete_ = false;
};

/// Outcome counts n_j (or nonnegative intensity weights). Counts are reals,
/// not integers, so normalized intensity data flow through the same type;
/// the reconstruction engine consumes only the frequencies n_j / N.
struct Dataset {
    std::vector<double> counts;

    double total() const { return std::accumulate(counts.begin(), counts.end(), 0.0); }

    Dataset scaled(double factor) const {
        Dataset out = *this;
        for (double& c : out.counts) c *= factor;
        return out;
    }
};

struct PomValidationReport {
    double min_effect_eigenvalue = 0.0;
    double g_max_eigenvalue = 0.0;
    bool complete = false;
    Eigen::Index linearly_independent_count = 0;
};

namespace detail {

/// Map a Hermitian operator to a real coordinate vector of length dim^2 in
/// an orthonormal (Frobenius) basis: diagonal, then sqrt(2) Re / sqrt(2) Im
/// of the upper triangle.
inline Eigen::VectorXd hermitian_coordinates(const ComplexMatrix& h) {
    const Eigen::Index d = h.rows();
    Eigen::VectorXd v(d * d);
    Eigen::Index at = 0;
    for (Eigen::Index i = 0; i < d; ++i) v[at++] = h(i, i).real();
    const double root2 = std::sqrt(2.0);
    for (Eigen::Index r = 0; r < d; ++r) {
        for (Eigen::Index c = r + 1; c < d; ++c) {
            v[at++] = root2 * h(r, c).real();
            v[at++] = root2 * h(r, c).imag();
        }
    }
    return v;
}

inline Eigen::Index operator_set_rank(const std::vector<Effect>& effects) {
    const Eigen::Index d = effects.front().op.dim();
    Eigen::MatrixXd coords(static_cast<Eigen::Index>(effects.size()), d * d);
    for (Eigen::Index j = 0; j < coords.rows(); ++j) {
        coords.row(j) = hermitian_coordinates(effects[static_cast<size_t>(j)].op.matrix());
    }
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(coords);
    const double threshold = 1e-10 * std::max(1.0, svd.singularValues()[0]);
    Eigen::Index rank = 0;
    for (Eigen::Index i = 0; i < svd.singularValues().size(); ++i) {
        if (svd.singularValues()[i] > threshold) ++rank;
    }
    return rank;
}

}  // namespace detail

/// Check positivity of every effect, the group-sum bound, completeness, and
/// the rank of the effect set viewed as vectors in the dim^2-dimensional
/// real space of Hermitian operators (informational completeness holds when
/// that rank reaches dim^2).
inline PomValidationReport validate_pom(const Pom& pom) {
    PomValidationReport report;
    report.min_effect_eigenvalue = std::numeric_limits<double>::infinity();
    for (const Effect& e : pom.effects()) {
        const auto spectral = detail::spectral_decompose_impl(e.op.matrix());
        const double min_eig = spectral.eigenvalues[spectral.eigenvalues.size() - 1];
        report.min_effect_eigenvalue = std::min(report.min_effect_eigenvalue, min_eig);
    }
    if (report.min_effect_eigenvalue < -Pom::kEffectPositivityTolerance) {
        throw std::invalid_argument("validate_pom: effect with eigenvalue " +
                                    std::to_string(report.min_effect_eigenvalue) +
                                    " below -1e-8; not a valid POM");
    }
    report.g_max_eigenvalue = pom.g_max_eigenvalue();
    report.complete = pom.complete();
    report.linearly_independent_count = detail::operator_set_rank(pom.effects());
    return report;
}

/// Outcome probabilities p_j = tr(rho Pi_j), clamped at zero against
/// roundoff.
inline std::vector<double> probabilities(const DensityMatrix& rho, const Pom& pom) {
    detail::require(rho.dim() == pom.dim(), "probabilities: dimension mismatch");
    std::vector<double> p;
    p.reserve(pom.effects().size());
    for (const Effect& e : pom.effects()) {
        const double value = detail::trace_product_real(rho.matrix(), e.op.matrix());
        detail::require(value >= -1e-9, "probabilities: negative outcome probability " +
                                            std::to_string(value));
        p.push_back(std::max(value, 0.0));
    }
    return p;
}

/// Total detection probability eta = sum_j p_j = tr(rho G).
inline double detection_efficiency(const DensityMatrix& rho, const Pom& pom) {
    const auto p = probabilities(rho, pom);
    const double eta = std::accumulate(p.begin(), p.end(), 0.0);
    if (eta <= 1e-12) {
        throw std::runtime_error("detection_efficiency: no outcome can fire (eta <= 1e-12)");
    }
    return std::min(eta, 1.0);
}

/// Most-likely total copy count M = N / eta given N detected copies.
inline double estimate_total_copies(double detected_n, double eta) {
    detail::require(detected_n > 0.0, "estimate_total_copies: N must be positive");
    detail::require(eta > 0.0 && eta <= 1.0, "estimate_total_copies: eta must lie in (0, 1]");
    return detected_n / eta;
}

namespace detail {

/// One multinomial draw via conditional binomials.
inline std::vector<long long> multinomial_draw(long long n, const std::vector<double>& p,
                                               Rng& rng) {
    std::vector<long long> counts(p.size(), 0);
    double remaining_mass = std::accumulate(p.begin(), p.end(), 0.0);
    long long remaining = n;
    for (size_t j = 0; j < p.size() && remaining > 0; ++j) {
        if (remaining_mass <= 0.0) break;
        const double q = std::clamp(p[j] / remaining_mass, 0.0, 1.0);
        long long draw;
        if (q >= 1.0) {
            draw = remaining;
        } else {
            std::binomial_distribution<long long> binomial(remaining, q);
            draw = binomial(rng);
        }
        counts[j] = draw;
        remaining -= draw;
        remaining_mass -= p[j];
    }
    return counts;
}

}  // namespace detail

/// Simulate a measurement of `copies_m` identically prepared copies. Losses
/// are one extra multinomial bin of mass 1 - eta whose counts are discarded,
/// so the returned total N is at most M, with equality exactly when G = 1.
inline Dataset simulate_counts(const DensityMatrix& rho, const Pom& pom, long long copies_m,
                               Rng& rng) {
    detail::require(copies_m >= 1, "simulate_counts: copies must be >= 1");
    std::vector<double> p = probabilities(rho, pom);
    const double eta = std::accumulate(p.begin(), p.end(), 0.0);
    p.push_back(std::max(1.0 - eta, 0.0));  // loss bin
    const auto draws = detail::multinomial_draw(copies_m, p, rng);
    Dataset data;
    data.counts.assign(draws.begin(), draws.end() - 1);
    return data;
}

/// Simulate exactly `detected_n` detected copies, i.e. a draw from the
/// detection-conditioned distribution p_j / eta. This matches benchmarks
/// that fix the detected count N rather than the unknown total M.
inline Dataset simulate_detected_counts(const DensityMatrix& rho, const Pom& pom,
                                        long long detected_n, Rng& rng) {
    detail::require(detected_n >= 1, "simulate_detected_counts: N must be >= 1");
    std::vector<double> p = probabilities(rho, pom);
    const double eta = std::accumulate(p.begin(), p.end(), 0.0);
    detail::require(eta > 1e-12, "simulate_detected_counts: degenerate detection");
    for (double& v : p) v /= eta;
    const auto draws = detail::multinomial_draw(detected_n, p, rng);
    Dataset data;
    data.counts.assign(draws.begin(), draws.end());
    return data;
}

struct RandomPomOptions {
    double g_max_lower = 0.5;
    double g_max_upper = 0.95;
};

/// A randomly generated lossy POM: effects B_j^dagger B_j from complex
/// Ginibre factors, jointly rescaled so the group-sum maximum eigenvalue is
/// a uniform draw from (g_max_lower, g_max_upper). Strictly G < 1, hence
/// informationally incomplete in the trace sense.
inline Pom random_imperfect_pom(Eigen::Index dim, Eigen::Index n_outcomes, Rng& rng,
                                const RandomPomOptions& options = {}) {
    detail::require(n_outcomes >= 1, "random_imperfect_pom: need at least one outcome");
    detail::require(options.g_max_lower > 0.0 && options.g_max_upper < 1.0 &&
                        options.g_max_lower < options.g_max_upper,
                    "random_imperfect_pom: rescale range must lie inside (0, 1)");
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<ComplexMatrix> raw;
    ComplexMatrix g = ComplexMatrix::Zero(dim, dim);
    for (Eigen::Index j = 0; j < n_outcomes; ++j) {
        ComplexMatrix b(dim, dim);
        for (Eigen::Index r = 0; r < dim; ++r)
            for (Eigen::Index c = 0; c < dim; ++c) b(r, c) = Complex(normal(rng), normal(rng));
        raw.push_back(b.adjoint() * b);
        g += raw.back();
    }
    const auto spectral = detail::spectral_decompose_impl(g);
    std::uniform_real_distribution<double> target(options.g_max_lower, options.g_max_upper);
    const double scale = target(rng) / spectral.eigenvalues[0];
    std::vector<Effect> effects;
    for (Eigen::Index j = 0; j < n_outcomes; ++j) {
        effects.emplace_back(HermitianOperator(scale * raw[static_cast<size_t>(j)]),
                             "random" + std::to_string(j));
    }
    return Pom(std::move(effects), dim);
}

/// Outcome frequencies f_j = n_j / N.
inline std::vector<double> frequencies(const Dataset& data) {
    const double n = data.total();
    detail::require(n > 0.0, "frequencies: total count must be positive");
    std::vector<double> f;
    f.reserve(data.counts.size());
    for (double c : data.counts) {
        detail::require(c >= 0.0, "frequencies: negative count");
        f.push_back(c / n);
    }
    return f;
}

}  // namespace mlme

#endif  // MLME_MEASUREMENT_HPP
