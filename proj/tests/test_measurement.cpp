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

#include "mlme/measurement.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numeric>

using namespace mlme;

namespace {

ComplexMatrix projector(Eigen::Index dim, Eigen::Index k) {
    ComplexMatrix m = ComplexMatrix::Zero(dim, dim);
    m(k, k) = 1.0;
    return m;
}

Pom qubit_basis_pom() {
    std::vector<Effect> effects;
    effects.emplace_back(HermitianOperator(projector(2, 0)), "p0");
    effects.emplace_back(HermitianOperator(projector(2, 1)), "p1");
    return Pom(std::move(effects), 2);
}

DensityMatrix maximally_mixed(Eigen::Index dim) {
    return DensityMatrix(ComplexMatrix::Identity(dim, dim) / static_cast<double>(dim));
}

DensityMatrix basis_state(Eigen::Index dim, Eigen::Index k) {
    return DensityMatrix(projector(dim, k));
}

}  // namespace

TEST_CASE("validate_pom on the qubit basis", "[measurement]") {
    const auto report = validate_pom(qubit_basis_pom());
    CHECK(report.complete);
    CHECK(report.linearly_independent_count == 2);
    CHECK(report.g_max_eigenvalue == Catch::Approx(1.0));
    CHECK(report.min_effect_eigenvalue >= -1e-12);
}

TEST_CASE("validate_pom on a single scaled-identity effect", "[measurement]") {
    std::vector<Effect> effects;
    effects.emplace_back(HermitianOperator(0.5 * ComplexMatrix::Identity(2, 2)), "half");
    const auto report = validate_pom(Pom(std::move(effects), 2));
    CHECK_FALSE(report.complete);
    CHECK(report.g_max_eigenvalue == Catch::Approx(0.5));
    CHECK(report.linearly_independent_count == 1);
}

TEST_CASE("validate_pom rejects negative effects", "[measurement]") {
    ComplexMatrix bad = ComplexMatrix::Zero(2, 2);
    bad(0, 0) = 0.5;
    bad(1, 1) = -0.2;
    std::vector<Effect> effects;
    effects.emplace_back(HermitianOperator(bad), "bad");
    effects.emplace_back(HermitianOperator(0.2 * ComplexMatrix::Identity(2, 2)), "ok");
    const Pom pom(std::move(effects), 2);
    CHECK_THROWS_AS(validate_pom(pom), std::invalid_argument);
}

TEST_CASE("probabilities basics", "[measurement]") {
    const auto p = probabilities(maximally_mixed(2), qubit_basis_pom());
    REQUIRE(p.size() == 2);
    CHECK(p[0] == Catch::Approx(0.5));
    CHECK(p[1] == Catch::Approx(0.5));

    std::vector<Effect> one;
    one.emplace_back(HermitianOperator(0.3 * projector(2, 0)), "weak0");
    const auto p1 = probabilities(basis_state(2, 0), Pom(std::move(one), 2));
    CHECK(p1[0] == Catch::Approx(0.3));

    CHECK_THROWS_AS(probabilities(maximally_mixed(3), qubit_basis_pom()), std::invalid_argument);
}

TEST_CASE("probabilities match the elementwise trace oracle", "[measurement]") {
    Rng rng(31);
    for (int trial = 0; trial < 5; ++trial) {
        const DensityMatrix rho = random_hs_state(3, rng);
        const Pom pom = random_imperfect_pom(3, 4, rng);
        const auto p = probabilities(rho, pom);
        double total = 0.0;
        for (size_t j = 0; j < p.size(); ++j) {
            // Brute-force sum over matrix entries: tr(rho Pi) = sum_mn rho_mn Pi_nm.
            Complex acc = 0.0;
            const ComplexMatrix& pi = pom.effects()[j].op.matrix();
            for (Eigen::Index m = 0; m < 3; ++m)
                for (Eigen::Index n = 0; n < 3; ++n) acc += rho.matrix()(m, n) * pi(n, m);
            CHECK(std::abs(p[j] - acc.real()) < 1e-12);
            CHECK(p[j] >= 0.0);
            total += p[j];
        }
        CHECK(total <= 1.0 + 1e-9);
        CHECK(std::abs(total - (rho.matrix() * pom.group_sum()).trace().real()) < 1e-12);
    }
}

TEST_CASE("detection_efficiency", "[measurement]") {
    Rng rng(32);
    CHECK(detection_efficiency(random_hs_state(2, rng), qubit_basis_pom()) ==
          Catch::Approx(1.0).margin(1e-10));

    std::vector<Effect> weak;
    weak.emplace_back(HermitianOperator(0.3 * projector(2, 0)), "a");
    weak.emplace_back(HermitianOperator(0.4 * projector(2, 1)), "b");
    CHECK(detection_efficiency(maximally_mixed(2), Pom(std::move(weak), 2)) ==
          Catch::Approx(0.35));

    std::vector<Effect> scalar;
    scalar.emplace_back(HermitianOperator(0.8 * ComplexMatrix::Identity(2, 2)), "g");
    CHECK(detection_efficiency(random_hs_state(2, rng), Pom(std::move(scalar), 2)) ==
          Catch::Approx(0.8));

    std::vector<Effect> blind;
    blind.emplace_back(HermitianOperator(1e-15 * projector(2, 1)), "blind");
    CHECK_THROWS_AS(detection_efficiency(basis_state(2, 0), Pom(std::move(blind), 2)),
                    std::runtime_error);
}

TEST_CASE("estimate_total_copies", "[measurement]") {
    CHECK(estimate_total_copies(5000, 1.0) == Catch::Approx(5000.0));
    CHECK(estimate_total_copies(5000, 0.5) == Catch::Approx(10000.0));
    CHECK_THROWS_AS(estimate_total_copies(5000, 0.0), std::invalid_argument);
}

TEST_CASE("estimate_total_copies recovers M from a lossy simulation", "[measurement]") {
    // Simulate M = 20000 copies through an eta = 0.35 POM, then invert.
    std::vector<Effect> weak;
    weak.emplace_back(HermitianOperator(0.3 * projector(2, 0)), "a");
    weak.emplace_back(HermitianOperator(0.4 * projector(2, 1)), "b");
    const Pom pom(std::move(weak), 2);
    const DensityMatrix rho = maximally_mixed(2);
    const double eta = detection_efficiency(rho, pom);
    REQUIRE(eta == Catch::Approx(0.35));

    Rng rng(33);
    const long long m_true = 20000;
    const Dataset data = simulate_counts(rho, pom, m_true, rng);
    const double estimate = estimate_total_copies(data.total(), eta);
    const double sigma = std::sqrt(m_true * eta * (1.0 - eta)) / eta;
    CHECK(std::abs(estimate - m_true) <= 3.0 * sigma);
}

TEST_CASE("simulate_counts basics", "[measurement]") {
    Rng rng(34);
    const Dataset complete = simulate_counts(maximally_mixed(2), qubit_basis_pom(), 1000, rng);
    CHECK(complete.total() == Catch::Approx(1000.0));

    const Dataset deterministic = simulate_counts(basis_state(2, 0), qubit_basis_pom(), 100, rng);
    CHECK(deterministic.counts[0] == Catch::Approx(100.0));
    CHECK(deterministic.counts[1] == Catch::Approx(0.0));
}

TEST_CASE("simulate_counts loss-bin concentration", "[measurement]") {
    std::vector<Effect> weak;
    weak.emplace_back(HermitianOperator(0.3 * projector(2, 0)), "a");
    weak.emplace_back(HermitianOperator(0.4 * projector(2, 1)), "b");
    const Pom pom(std::move(weak), 2);
    Rng rng(35);
    const long long m = 100000;
    const Dataset data = simulate_counts(maximally_mixed(2), pom, m, rng);
    CHECK(std::abs(data.total() / m - 0.35) < 0.005);
}

TEST_CASE("simulate_counts frequencies converge to conditional probabilities", "[measurement]") {
    Rng rng(36);
    const DensityMatrix rho = random_hs_state(2, rng);
    const Pom pom = random_imperfect_pom(2, 3, rng);
    const auto p = probabilities(rho, pom);
    const double eta = std::accumulate(p.begin(), p.end(), 0.0);
    const long long m = 1000000;
    const Dataset data = simulate_counts(rho, pom, m, rng);
    const auto f = frequencies(data);
    for (size_t j = 0; j < f.size(); ++j) {
        CHECK(std::abs(f[j] - p[j] / eta) < 5.0 / std::sqrt(static_cast<double>(m)));
    }
}

TEST_CASE("simulate_detected_counts fixes N exactly", "[measurement]") {
    Rng rng(37);
    const DensityMatrix rho = random_hs_state(2, rng);
    const Pom pom = random_imperfect_pom(2, 2, rng);
    const Dataset data = simulate_detected_counts(rho, pom, 5000, rng);
    CHECK(data.total() == Catch::Approx(5000.0));
}

TEST_CASE("random_imperfect_pom construction properties", "[measurement]") {
    Rng a(38), b(38);
    const Pom pa = random_imperfect_pom(2, 2, a);
    const Pom pb = random_imperfect_pom(2, 2, b);
    CHECK((pa.group_sum() - pb.group_sum()).norm() == 0.0);

    Rng rng(39);
    for (int seed_trial = 0; seed_trial < 100; ++seed_trial) {
        const Pom pom = random_imperfect_pom(2, 2, rng);
        const auto report = validate_pom(pom);
        CHECK_FALSE(report.complete);
        CHECK(report.g_max_eigenvalue > 0.5);
        CHECK(report.g_max_eigenvalue < 0.95);
        CHECK(report.min_effect_eigenvalue >= -1e-12);
        // Two outcomes can never be informationally complete in dim 2.
        CHECK(report.linearly_independent_count <= 2);
    }
}

TEST_CASE("frequencies", "[measurement]") {
    CHECK(frequencies(Dataset{{10.0, 30.0}}) == std::vector<double>{0.25, 0.75});
    CHECK(frequencies(Dataset{{5.0}}) == std::vector<double>{1.0});
    const std::vector<double> weights{0.2, 0.3, 0.5};
    CHECK(frequencies(Dataset{weights}) == weights);
    CHECK_THROWS_AS(frequencies(Dataset{{0.0, 0.0}}), std::invalid_argument);
}

TEST_CASE("completeness flag matches unit efficiency on random states", "[measurement]") {
    Rng rng(40);
    const Pom complete = qubit_basis_pom();
    const Pom lossy = random_imperfect_pom(2, 3, rng);
    for (int trial = 0; trial < 20; ++trial) {
        const DensityMatrix rho = random_hs_state(2, rng);
        CHECK(std::abs(detection_efficiency(rho, complete) - 1.0) < 1e-8);
        CHECK(detection_efficiency(rho, lossy) < 1.0 - 1e-8);
    }
}
