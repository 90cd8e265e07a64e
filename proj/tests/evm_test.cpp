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

#include "evmverify/evm.hpp"

#include <gtest/gtest.h>

#include <random>

#include "support/test_util.hpp"

using namespace evmverify;

namespace {

DictPtr active_one_mode_dict(double e1, double e2, int cutoff = 2) {
  Eigen::MatrixXd m(1, 2);
  m << e1, e2;
  SchemeConfig config{Scheme::active, 1, 0.5};
  auto sp = enumerate_basis({1, PolarizationView::HV}, cutoff);
  return std::make_shared<const OperatorDictionary>(
      build_dictionary_with_relations(config, DetectorModel{m}, sp));
}

/// Local Alice filter forcing the reduced state to exactly I/2, preserving
/// positivity, block-diagonality, realness, and separability.
Matrix filter_alice_marginal(const Matrix& rho) {
  int s = int(rho.rows()) / 2;
  Matrix rho_a = Matrix::Zero(2, 2);
  for (int i = 0; i < 2; ++i)
    for (int k = 0; k < 2; ++k)
      for (int a = 0; a < s; ++a) rho_a(i, k) += rho(i * s + a, k * s + a);
  rho_a = 0.5 * (rho_a + rho_a.adjoint()) + 1e-14 * Matrix::Identity(2, 2);
  Eigen::SelfAdjointEigenSolver<Matrix> es(2.0 * rho_a);
  Matrix filt = es.operatorInverseSqrt();
  Matrix out = kron(filt, Matrix::Identity(s, s)) * rho *
               kron(filt.adjoint(), Matrix::Identity(s, s));
  return out / out.trace().real();
}

/// Random real block-diagonal joint state on (Alice qubit) x (Bob space)
/// with maximally mixed Alice marginal.
Matrix random_block_state(const SpacePtr& space, std::mt19937& rng) {
  int s = space->dim();
  Eigen::MatrixXd raw = Eigen::MatrixXd::Zero(2 * s, 2 * s);
  for (int n = 0; n <= space->cutoff(); ++n) {
    int b = space->grade_begin(n), d = space->grade_dim(n);
    Eigen::MatrixXd blk = evmverify::testsupport::random_symmetric(2 * d, rng);
    blk = blk * blk.transpose();
    for (int i = 0; i < 2; ++i)
      for (int k = 0; k < 2; ++k)
        for (int a = 0; a < d; ++a)
          for (int c = 0; c < d; ++c)
            raw(i * s + b + a, k * s + b + c) += blk(i * d + a, k * d + c);
  }
  raw /= raw.trace();
  return filter_alice_marginal(raw.cast<Complex>());
}

/// Separable version: mixture of (real qubit state) x (real block-diagonal
/// Bob state) products.
Matrix random_separable_block_state(const SpacePtr& space, std::mt19937& rng, int parts = 4) {
  int s = space->dim();
  Matrix rho = Matrix::Zero(2 * s, 2 * s);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int p = 0; p < parts; ++p) {
    Eigen::MatrixXd qa = evmverify::testsupport::random_real_density(2, rng);
    Eigen::MatrixXd qb = Eigen::MatrixXd::Zero(s, s);
    for (int n = 0; n <= space->cutoff(); ++n) {
      int b = space->grade_begin(n), d = space->grade_dim(n);
      Eigen::MatrixXd blk = evmverify::testsupport::random_real_density(d, rng);
      qb.block(b, b, d, d) = u(rng) * blk;
    }
    qb /= qb.trace();
    rho += u(rng) * kron(qa.cast<Complex>(), qb.cast<Complex>());
  }
  rho /= rho.trace().real();
  return filter_alice_marginal(rho);
}

TailBounds zero_tails() {
  TailBounds t;
  t.d3_min = 0.0;
  t.e3_min = 0.0;
  return t;
}

}  // namespace

TEST(Compile, LedgerCountsForActiveOneMode) {
  DictPtr dict = active_one_mode_dict(1.0, 0.5);
  auto povm = dict->povm;
  std::mt19937 rng(7);
  Matrix rho = random_separable_block_state(dict->space, rng);
  ObservedStatistics stats = statistics_of_state(rho, povm);
  EVMProblem prob = compile(dict, stats, zero_tails());
  EXPECT_EQ(prob.dim, 36);
  EXPECT_EQ(int(prob.group("observations").constraints.size()), 16);
  EXPECT_EQ(int(prob.group("cross-observations").constraints.size()), 12);
  EXPECT_EQ(int(prob.group("operator-relations").constraints.size()), 188);
  EXPECT_EQ(int(prob.group("commutation-identities").constraints.size()), 72);
  EXPECT_EQ(int(prob.group("realness").constraints.size()), 34);
  EXPECT_EQ(int(prob.group("projection-decompositions").constraints.size()), 320);
  EXPECT_EQ(int(prob.group("operator-inequalities").constraints.size()), 108);
  EXPECT_EQ(int(prob.group("photon-tails").constraints.size()), 16);
}

TEST(Compile, LedgerCountsStableAcrossModels) {
  std::mt19937 rng(99);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 3; ++trial) {
    DictPtr dict = active_one_mode_dict(u(rng), u(rng));
    Matrix rho = random_separable_block_state(dict->space, rng);
    ObservedStatistics stats = statistics_of_state(rho, dict->povm);
    EXPECT_NO_THROW(compile(dict, stats, zero_tails()));
  }
}

// Every compiled equality holds on the direct-trace EVM of random
// block-diagonal states; every inequality holds for PPT states.
TEST(Compile, OracleConsistency) {
  std::mt19937 rng(1234);
  DictPtr dict = active_one_mode_dict(0.85, 0.55, 3);
  for (int trial = 0; trial < 60; ++trial) {
    Matrix rho = trial % 2 == 0 ? random_block_state(dict->space, rng)
                                : random_separable_block_state(dict->space, rng);
    bool separable = trial % 2 == 1;
    ObservedStatistics stats = statistics_of_state(rho, dict->povm);
    EVMProblem prob = compile(dict, stats, zero_tails());
    Matrix chi = evm_of_state(rho, *dict);
    for (const auto& g : prob.groups)
      for (const auto& c : g.constraints) {
        Complex v = evaluate_constraint(c, chi);
        if (c.rel == Rel::EQ)
          ASSERT_LT(std::abs(v - Complex(c.rhs, 0.0)), 1e-9)
              << g.name << ": " << c.note << " trial " << trial;
        else if (c.rel == Rel::REQ)
          ASSERT_LT(std::abs(v.real() - c.rhs), 1e-9)
              << g.name << ": " << c.note << " trial " << trial;
        else if (separable)
          ASSERT_GT(v.real(), c.rhs - 1e-9)
              << g.name << ": " << c.note << " trial " << trial;
      }
  }
}

TEST(Compile, PassiveGroupsRecorded) {
  SchemeConfig config{Scheme::passive, 1, 0.5};
  Eigen::MatrixXd m(1, 4);
  m << 1.0, 0.6, 0.8, 0.5;
  auto sp = enumerate_basis({1, PolarizationView::HV}, 2);
  DictPtr dict = std::make_shared<const OperatorDictionary>(
      build_dictionary_with_relations(config, DetectorModel{m}, sp));
  std::mt19937 rng(5);
  Matrix rho = random_separable_block_state(sp, rng);
  ObservedStatistics stats = statistics_of_state(rho, dict->povm);
  TailBounds tails;
  tails.c2_min = 0.0;
  EVMProblem prob = compile(dict, stats, tails);
  EXPECT_EQ(prob.dim, 38);
  EXPECT_EQ(int(prob.group("observations").constraints.size()), 4 + 14);
  // Oracle check on the passive groups too.
  Matrix chi = evm_of_state(rho, *dict);
  for (const auto& g : prob.groups)
    for (const auto& c : g.constraints) {
      Complex v = evaluate_constraint(c, chi);
      if (c.rel == Rel::EQ) ASSERT_LT(std::abs(v - Complex(c.rhs, 0.0)), 1e-9) << c.note;
    }
}

TEST(Evm, PsdAndHermitianByConstruction) {
  std::mt19937 rng(777);
  DictPtr dict = active_one_mode_dict(0.7, 0.3);
  for (int trial = 0; trial < 20; ++trial) {
    Matrix rho = random_block_state(dict->space, rng);
    Matrix chi = evm_of_state(rho, *dict);
    EXPECT_LT((chi - chi.adjoint()).cwiseAbs().maxCoeff(), 1e-10);
    EXPECT_GT(testsupport::min_eigenvalue(chi), -1e-10);
  }
}

TEST(PartialTranspose, InvolutionAndIdentity) {
  std::mt19937 rng(31);
  int bob = 18;
  Matrix id = Matrix::Identity(36, 36);
  EXPECT_LT((partial_transpose(id, bob) - id).cwiseAbs().maxCoeff(), 1e-15);
  Matrix x = testsupport::random_hermitian(36, rng);
  EXPECT_LT((partial_transpose(partial_transpose(x, bob), bob) - x).cwiseAbs().maxCoeff(),
            1e-15);
}

TEST(PartialTranspose, SeparableEvmIsPpt) {
  std::mt19937 rng(17);
  DictPtr dict = active_one_mode_dict(0.9, 0.4);
  for (int trial = 0; trial < 20; ++trial) {
    Matrix rho = random_separable_block_state(dict->space, rng);
    Matrix chi = evm_of_state(rho, *dict);
    EXPECT_GT(testsupport::min_eigenvalue(partial_transpose(chi, dict->bob_count())), -1e-9);
  }
}

TEST(Evm, VacuumStateEntries) {
  DictPtr dict = active_one_mode_dict(0.8, 0.6);
  int s = dict->space->dim();
  Matrix rho = Matrix::Zero(2 * s, 2 * s);
  // (I/2) x |Vac><Vac|
  rho(0 * s + 0, 0 * s + 0) = 0.5;
  rho(1 * s + 0, 1 * s + 0) = 0.5;
  Matrix chi = evm_of_state(rho, *dict);
  int B = dict->bob_count();
  // Alice marginals 1/2 on the identity column; click statistics vanish.
  EXPECT_NEAR(chi(0, 0).real(), 0.5, 1e-12);
  EXPECT_NEAR(chi(B, B).real(), 0.5, 1e-12);
  for (int m : dict->measurement_indices) EXPECT_NEAR(std::abs(chi(0, m)), 0.0, 1e-12);
}

TEST(Statistics, ValidationCatchesBrokenTables) {
  ObservedStatistics stats;
  stats.scheme = Scheme::active;
  stats.set(Outcome::H, Outcome::H, 0.4);
  EXPECT_THROW(validate_statistics(stats), std::invalid_argument);
}

TEST(Dump, ContainsGroupsAndCounts) {
  DictPtr dict = active_one_mode_dict(1.0, 0.5);
  std::mt19937 rng(3);
  Matrix rho = random_separable_block_state(dict->space, rng);
  EVMProblem prob = compile(dict, statistics_of_state(rho, dict->povm), zero_tails());
  std::string dump = dump_problem(prob);
  EXPECT_NE(dump.find("group observations 16"), std::string::npos);
  EXPECT_NE(dump.find("group projection-decompositions 320"), std::string::npos);
}

int main(int argc, char** argv) {
  ::testing::InitGoogleTest(&argc, argv);
  return RUN_ALL_TESTS();
}
