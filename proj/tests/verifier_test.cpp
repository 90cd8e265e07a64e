/**
 * Copyright 2026 The evmverify Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "evmverify/verifier.hpp"

#include <gtest/gtest.h>

#include <random>

#include "support/test_util.hpp"

using namespace evmverify;

namespace {

DictPtr make_dict(Scheme scheme, const Eigen::MatrixXd& etas, int cutoff = 2) {
  SchemeConfig config{scheme, int(etas.rows()), 0.5};
  auto sp = enumerate_basis({int(etas.rows()), PolarizationView::HV}, cutoff);
  return std::make_shared<const OperatorDictionary>(
      build_dictionary_with_relations(config, DetectorModel{etas}, sp));
}

/// Source-replacement BB84 state with the photon in spatial mode 0,
/// depolarized with probability omega on Bob's polarization qubit.
Matrix bb84_state(const SpacePtr& space, double omega) {
  int s = space->dim();
  int modes = 2 * space->modes().spatial_modes;
  Occupation h(modes, 0), v(modes, 0);
  h[0] = 1;
  v[1] = 1;
  int ih = space->index_of(h), iv = space->index_of(v);
  Vector phi = Vector::Zero(2 * s);
  phi(0 * s + ih) = 1.0 / std::sqrt(2.0);
  phi(1 * s + iv) = 1.0 / std::sqrt(2.0);
  Matrix pure = phi * phi.adjoint();
  // Depolarize Bob's single-photon qubit: (1-w) rho + w (rho_A x I_q/2).
  Matrix mixed = Matrix::Zero(2 * s, 2 * s);
  mixed(0 * s + ih, 0 * s + ih) = 0.25;
  mixed(0 * s + iv, 0 * s + iv) = 0.25;
  mixed(1 * s + ih, 1 * s + ih) = 0.25;
  mixed(1 * s + iv, 1 * s + iv) = 0.25;
  return (1.0 - omega) * pure + omega * mixed;
}

TailBounds zero_tails(Scheme scheme) {
  TailBounds t;
  if (scheme == Scheme::active) {
    t.d3_min = 0.0;
    t.e3_min = 0.0;
  } else {
    t.c2_min = 0.0;
  }
  return t;
}

}  // namespace

TEST(Verify, NoiselessBb84IsEntangled) {
  Eigen::MatrixXd etas(1, 2);
  etas << 1.0, 1.0;
  DictPtr dict = make_dict(Scheme::active, etas);
  Matrix rho = bb84_state(dict->space, 0.0);
  ObservedStatistics stats = statistics_of_state(rho, dict->povm);
  EVMProblem prob = compile(dict, stats, zero_tails(Scheme::active));
  FeasibilityVerdict v = verify(prob);
  EXPECT_EQ(v.verdict, Verdict::ENTANGLED) << v.diagnostics << " margin " << v.margin;
  EXPECT_LT(v.certified_upper, -1e-7);
}

TEST(Verify, ProductStateIsNotVerified) {
  Eigen::MatrixXd etas(1, 2);
  etas << 1.0, 0.5;
  DictPtr dict = make_dict(Scheme::active, etas);
  int s = dict->space->dim();
  // (I/2) x (mixed single photon + vacuum)
  Matrix bob = Matrix::Zero(s, s);
  bob(0, 0) = 0.5;
  bob(dict->space->index_of({1, 0}), dict->space->index_of({1, 0})) = 0.25;
  bob(dict->space->index_of({0, 1}), dict->space->index_of({0, 1})) = 0.25;
  Matrix rho = 0.5 * kron(Matrix::Identity(2, 2), bob);
  ObservedStatistics stats = statistics_of_state(rho, dict->povm);
  EVMProblem prob = compile(dict, stats, zero_tails(Scheme::active));
  FeasibilityVerdict v = verify(prob);
  EXPECT_EQ(v.verdict, Verdict::NOT_VERIFIED) << v.diagnostics << " margin " << v.margin;
  ASSERT_TRUE(v.feasible_chi.has_value());
  EXPECT_GT(testsupport::min_eigenvalue(*v.feasible_chi), -1e-9);
}

TEST(Verify, DepolarizedBb84AcrossThreshold) {
  Eigen::MatrixXd etas(1, 2);
  etas << 1.0, 1.0;
  DictPtr dict = make_dict(Scheme::active, etas);
  CompileOptions options;
  {
    Matrix rho = bb84_state(dict->space, 0.30);
    EVMProblem prob =
        compile(dict, statistics_of_state(rho, dict->povm), zero_tails(Scheme::active), options);
    FeasibilityVerdict v = verify(prob);
    EXPECT_EQ(v.verdict, Verdict::ENTANGLED) << "omega 0.30 margin " << v.margin;
  }
  {
    Matrix rho = bb84_state(dict->space, 0.60);
    EVMProblem prob =
        compile(dict, statistics_of_state(rho, dict->povm), zero_tails(Scheme::active), options);
    FeasibilityVerdict v = verify(prob);
    EXPECT_EQ(v.verdict, Verdict::NOT_VERIFIED) << "omega 0.60 margin " << v.margin;
  }
}

TEST(Verify, MismatchedBb84StillEntangledAtLowNoise) {
  Eigen::MatrixXd etas(1, 2);
  etas << 1.0, 0.4;
  DictPtr dict = make_dict(Scheme::active, etas);
  Matrix rho = bb84_state(dict->space, 0.05);
  ObservedStatistics stats = statistics_of_state(rho, dict->povm);
  EVMProblem prob = compile(dict, stats, zero_tails(Scheme::active));
  FeasibilityVerdict v = verify(prob);
  EXPECT_EQ(v.verdict, Verdict::ENTANGLED) << v.diagnostics << " margin " << v.margin;
}

TEST(Verify, PassiveNoiselessBb84IsEntangled) {
  Eigen::MatrixXd etas(1, 4);
  etas << 1.0, 1.0, 1.0, 1.0;
  DictPtr dict = make_dict(Scheme::passive, etas);
  Matrix rho = bb84_state(dict->space, 0.0);
  ObservedStatistics stats = statistics_of_state(rho, dict->povm);
  EVMProblem prob = compile(dict, stats, zero_tails(Scheme::passive));
  FeasibilityVerdict v = verify(prob);
  EXPECT_EQ(v.verdict, Verdict::ENTANGLED) << v.diagnostics << " margin " << v.margin;
}

TEST(FindEtaMin, SyntheticMonotoneFamily) {
  auto verdict_at = [](double eta) {
    return eta >= 0.371 ? Verdict::ENTANGLED : Verdict::NOT_VERIFIED;
  };
  EtaScan scan = find_eta_min(verdict_at, 1e-3);
  ASSERT_TRUE(scan.eta_min.has_value());
  EXPECT_NEAR(*scan.eta_min, 0.371, 2e-3);

  auto nothing = [](double) { return Verdict::NOT_VERIFIED; };
  EXPECT_FALSE(find_eta_min(nothing).eta_min.has_value());

  auto everywhere = [](double) { return Verdict::ENTANGLED; };
  EtaScan all = find_eta_min(everywhere);
  EXPECT_TRUE(all.verified_everywhere);

  auto bad = [](double eta) {
    return eta < 0.5 ? Verdict::ENTANGLED : Verdict::NOT_VERIFIED;
  };
  EXPECT_THROW(find_eta_min(bad), std::runtime_error);
}

int main(int argc, char** argv) {
  ::testing::InitGoogleTest(&argc, argv);
  return RUN_ALL_TESTS();
}
