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

#ifndef MLME_PHOTOCOUNT_HPP
#define MLME_PHOTOCOUNT_HPP

/// Time-multiplexed photon-counting measurement models: splitter-chain port
/// efficiencies, click-pattern Fock-diagonal effects, displacement
/// operators, phase-space-displaced POM sets, and the reference true states
/// (laser stationary state, even coherent-superposition state).

#include <algorithm>
#include <bit>
#include <cmath>
#include <string>
#include <vector>

#include "mlme/measurement.hpp"
#include "mlme/quasiprob.hpp"

namespace mlme {

/// A chain of K beam splitters feeding K+1 binary detectors. transmissions
/// holds T_1..T_{K+1} (the last entry participates only through the final
/// port's collection term) and detector_efficiencies holds eta_1..eta_{K+1}.
struct SplitterChain {
    std::vector<double> transmissions;
    std::vector<double> detector_efficiencies;

    size_t port_count() const { return transmissions.size(); }

    void validate() const {
        detail::require(!transmissions.empty(), "SplitterChain: need at least one port");
        detail::require(transmissions.size() == detector_efficiencies.size(),
                        "SplitterChain: transmissions and efficiencies must have equal length");
        for (double t : transmissions)
            detail::require(t >= 0.0 && t <= 1.0, "SplitterChain: transmission outside [0, 1]");
        for (double e : detector_efficiencies)
            detail::require(e >= 0.0 && e <= 1.0, "SplitterChain: efficiency outside [0, 1]");
    }
};

/// Set of fired ports encoded as a bitmask (bit k = port k clicked).
using ClickPattern = std::uint32_t;

/// Overall port efficiencies eta~_k = eta_k (1 - T_k + T_{K+1} delta_{k,K+1})
/// prod_{j<k} T_j: the fraction of input photons that produce a click at
/// port k. The last port collects the fully transmitted beam.
inline std::vector<double> port_efficiencies(const SplitterChain& chain) {
    chain.validate();
    const size_t ports = chain.port_count();
    std::vector<double> etas(ports, 0.0);
    double upstream = 1.0;  // prod_{j<k} T_j
    for (size_t k = 0; k < ports; ++k) {
        const double t = chain.transmissions[k];
        const double collect = (k + 1 == ports) ? (1.0 - t + t) : (1.0 - t);
        etas[k] = chain.detector_efficiencies[k] * collect * upstream;
        upstream *= t;
    }
    return etas;
}

/// Probability c_{S,n} that exactly the ports in `pattern` click when n
/// photons enter the chain, photons routing independently to port k with
/// probability eta~_k (else lost). Inclusion-exclusion over subsets of S:
/// c_{S,n} = sum_{T subset S} (-1)^{|S \ T|} (1 - sum_{k not in T} eta~_k)^n.
inline double click_coefficient(const std::vector<double>& etas, ClickPattern pattern, int n) {
    detail::require(n >= 0, "click_coefficient: n must be nonnegative");
    detail::require(etas.size() <= 16, "click_coefficient: at most 16 ports supported");
    double total_eta = 0.0;
    for (double e : etas) {
        detail::require(e >= 0.0, "click_coefficient: negative port efficiency");
        total_eta += e;
    }
    detail::require(total_eta <= 1.0 + 1e-12, "click_coefficient: port efficiencies exceed 1");

    const ClickPattern full = (etas.size() == 32u) ? ~0u : ((1u << etas.size()) - 1u);
    detail::require((pattern & ~full) == 0, "click_coefficient: pattern has bits beyond the ports");

    double sum = 0.0;
    ClickPattern t = pattern;
    while (true) {
        double eta_in_t = 0.0;
        for (size_t k = 0; k < etas.size(); ++k) {
            if (t & (1u << k)) eta_in_t += etas[k];
        }
        const double base = std::clamp(1.0 - (total_eta - eta_in_t), 0.0, 1.0);
        const int removed = std::popcount(pattern & ~t);
        const double term = std::pow(base, n);
        sum += (removed % 2 == 0) ? term : -term;
        if (t == 0) break;
        t = (t - 1) & pattern;
    }
    return std::clamp(sum, 0.0, 1.0);
}

/// The Fock-diagonal click-pattern POM of a splitter chain, truncated to a
/// working dimension. Pattern labels record the fired-port bit string.
struct FockPom {
    Pom pom;
    std::vector<ClickPattern> patterns;
    size_t n_ports = 0;
};

inline FockPom tmd_pom(const SplitterChain& chain, Eigen::Index fock_dim) {
    chain.validate();
    detail::require(chain.port_count() <= 16, "tmd_pom: at most 16 ports supported");
    detail::require(fock_dim >= 1, "tmd_pom: fock_dim must be >= 1");
    const auto etas = port_efficiencies(chain);
    const size_t ports = chain.port_count();
    const ClickPattern outcomes = 1u << ports;

    std::vector<Effect> effects;
    std::vector<ClickPattern> patterns;
    effects.reserve(outcomes);
    for (ClickPattern s = 0; s < outcomes; ++s) {
        ComplexMatrix m = ComplexMatrix::Zero(fock_dim, fock_dim);
        for (Eigen::Index n = 0; n < fock_dim; ++n) {
            m(n, n) = click_coefficient(etas, s, static_cast<int>(n));
        }
        std::string label = "pattern_";
        for (size_t k = 0; k < ports; ++k) label += (s & (1u << k)) ? '1' : '0';
        effects.emplace_back(HermitianOperator(m), label);
        patterns.push_back(s);
    }
    return FockPom{Pom(std::move(effects), fock_dim), std::move(patterns), ports};
}

/// Matrix elements of the displacement operator exp(alpha A^dag - alpha* A)
/// on a Fock truncation, via the closed Laguerre form
///   <m|D(alpha)|n> = sqrt(n!/m!) alpha^(m-n) e^(-|alpha|^2/2) L_n^(m-n)(|alpha|^2)
/// for m >= n and the conjugate-symmetric expression otherwise. Accuracy is
/// governed by the truncation; `truncation_warning` (optional) flags
/// fock_dim < 4 |alpha|^2 + 20.
inline ComplexMatrix displacement_matrix(Complex alpha, Eigen::Index fock_dim,
                                         bool* truncation_warning = nullptr) {
    detail::require(fock_dim >= 1, "displacement_matrix: fock_dim must be >= 1");
    const double a2 = std::norm(alpha);
    if (truncation_warning != nullptr) {
        *truncation_warning = static_cast<double>(fock_dim) < 4.0 * a2 + 20.0;
    }
    ComplexMatrix d(fock_dim, fock_dim);
    if (a2 == 0.0) {
        d.setIdentity();
        return d;
    }
    std::vector<double> lf(static_cast<size_t>(fock_dim), 0.0);
    for (size_t n = 2; n < lf.size(); ++n) lf[n] = lf[n - 1] + std::log(static_cast<double>(n));
    const double log_abs_alpha = 0.5 * std::log(a2);
    const Complex phase = alpha / std::abs(alpha);
    for (Eigen::Index m = 0; m < fock_dim; ++m) {
        for (Eigen::Index n = 0; n <= m; ++n) {
            const int diff = static_cast<int>(m - n);
            const double laguerre = associated_laguerre(static_cast<int>(n), diff, a2);
            const double log_mag = 0.5 * (lf[static_cast<size_t>(n)] - lf[static_cast<size_t>(m)]) +
                                   diff * log_abs_alpha - 0.5 * a2;
            const double mag = std::exp(log_mag) * laguerre;
            const Complex dir = std::pow(phase, diff);
            d(m, n) = mag * dir;
            if (m != n) {
                // <n|D|m> = sqrt(n!/m!) (-alpha*)^(m-n) e^(-|a|^2/2) L_n^(m-n)(|a|^2)
                const Complex anti = std::pow(-std::conj(phase), diff);
                d(n, m) = mag * anti;
            }
        }
    }
    return d;
}

/// Displace a Fock-diagonal POM by each alpha_k, weight by 1/N_alphas, and
/// truncate every effect to the reconstruction dimension. Effects are
/// computed in the base POM's working dimension first, so the group-sum
/// deficit on the reconstruction space equals the truncation leakage.
inline Pom displaced_pom(const FockPom& base, const std::vector<Complex>& alphas,
                         Eigen::Index reconstruction_dim) {
    detail::require(!alphas.empty(), "displaced_pom: need at least one displacement");
    const Eigen::Index d_work = base.pom.dim();
    detail::require(reconstruction_dim >= 1 && reconstruction_dim <= d_work,
                    "displaced_pom: reconstruction_dim must lie in [1, d_work]");
    const double weight = 1.0 / static_cast<double>(alphas.size());

    std::vector<Effect> effects;
    effects.reserve(alphas.size() * base.pom.effects().size());
    for (size_t a = 0; a < alphas.size(); ++a) {
        const ComplexMatrix d = displacement_matrix(alphas[a], d_work);
        // Only the first reconstruction_dim rows of D enter the truncated
        // congruence D diag(c) D^dagger.
        const ComplexMatrix rows = d.topRows(reconstruction_dim);
        for (size_t j = 0; j < base.pom.effects().size(); ++j) {
            const ComplexMatrix& diag = base.pom.effects()[j].op.matrix();
            const ComplexMatrix block =
                rows * diag.diagonal().asDiagonal() * rows.adjoint() * weight;
            effects.emplace_back(HermitianOperator(block),
                                 "a" + std::to_string(a) + "_" + base.pom.effects()[j].label);
        }
    }
    return Pom(std::move(effects), reconstruction_dim);
}

/// Stationary state of a laser: Poisson-weighted Fock mixture with mean
/// photon number mu, renormalized over the truncated space.
inline DensityMatrix laser_state(double mu, Eigen::Index dim) {
    detail::require(dim >= 1, "laser_state: dim must be >= 1");
    detail::require(mu >= 0.0, "laser_state: mu must be nonnegative");
    Eigen::VectorXd weights(dim);
    if (mu == 0.0) {
        weights.setZero();
        weights[0] = 1.0;
    } else {
        double log_w = -mu;  // log of e^-mu mu^n / n! at n = 0
        for (Eigen::Index n = 0; n < dim; ++n) {
            weights[n] = std::exp(log_w);
            log_w += std::log(mu) - std::log(static_cast<double>(n) + 1.0);
        }
    }
    weights /= weights.sum();
    ComplexMatrix m = ComplexMatrix::Zero(dim, dim);
    for (Eigen::Index n = 0; n < dim; ++n) m(n, n) = weights[n];
    return DensityMatrix(m);
}

/// Even coherent-superposition state (|alpha'> + |-alpha'>)/norm, truncated
/// and renormalized. Only even Fock components are nonzero.
inline DensityMatrix cat_state(Complex alpha_prime, Eigen::Index dim) {
    detail::require(dim >= 1, "cat_state: dim must be >= 1");
    Eigen::VectorXcd amplitudes = Eigen::VectorXcd::Zero(dim);
    amplitudes[0] = 1.0;
    Complex running = 1.0;  // alpha'^n / sqrt(n!) up to common factors
    for (Eigen::Index n = 2; n < dim; n += 2) {
        running *= alpha_prime * alpha_prime /
                   std::sqrt(static_cast<double>(n) * (static_cast<double>(n) - 1.0));
        amplitudes[n] = running;
    }
    amplitudes /= amplitudes.norm();
    return DensityMatrix::normalized(amplitudes * amplitudes.adjoint());
}

/// Mean photon number sum_n n rho_nn.
inline double mean_photon_number(const DensityMatrix& rho) {
    double mean = 0.0;
    for (Eigen::Index n = 0; n < rho.dim(); ++n) {
        mean += static_cast<double>(n) * rho.matrix()(n, n).real();
    }
    return mean;
}

}  // namespace mlme

#endif  // MLME_PHOTOCOUNT_HPP
