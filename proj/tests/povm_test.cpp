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

#include "evmverify/povm.hpp"

#include <gtest/gtest.h>

#include <random>

#include "support/test_util.hpp"

using namespace evmverify;

namespace {

DetectorModel active_model(double e1, double e2) {
  Eigen::MatrixXd m(1, 2);
  m << e1, e2;
  return DetectorModel{m};
}

DetectorModel passive_model(double eh, double ev, double ed, double ea) {
  Eigen::MatrixXd m(1, 4);
  m << eh, ev, ed, ea;
  return DetectorModel{m};
}

double expect(const FockOperator& op, int idx) { return op.mat(idx, idx).real(); }

void check_completeness(const PovmSet& set, double tol = 1e-10) {
  int d = set.space->dim();
  if (set.config.scheme == Scheme::active) {
    Matrix hv = set.at(Outcome::NoneHV).mat + set.at(Outcome::H).mat + set.at(Outcome::V).mat +
                set.at(Outcome::HV).mat;
    Matrix da = set.at(Outcome::NoneDA).mat + set.at(Outcome::D).mat + set.at(Outcome::A).mat +
                set.at(Outcome::DA).mat;
    EXPECT_LT((hv - Matrix::Identity(d, d)).cwiseAbs().maxCoeff(), tol);
    EXPECT_LT((da - Matrix::Identity(d, d)).cwiseAbs().maxCoeff(), tol);
  } else {
    Matrix sum = Matrix::Zero(d, d);
    for (Outcome o : outcome_alphabet(Scheme::passive)) sum += set.at(o).mat;
    EXPECT_LT((sum - Matrix::Identity(d, d)).cwiseAbs().maxCoeff(), tol);
  }
}

void check_psd_and_blocks(const PovmSet& set, double tol = 1e-10) {
  for (const auto& [label, op] : set.elements) {
    EXPECT_LT(op.hermiticity_defect(), 1e-12) << to_string(label);
    EXPECT_TRUE(op.block_diagonal) << to_string(label);
    Eigen::SelfAdjointEigenSolver<Matrix> es(op.mat, Eigen::EigenvaluesOnly);
    EXPECT_GT(es.eigenvalues().minCoeff(), -tol) << to_string(label);
    EXPECT_LT(es.eigenvalues().maxCoeff(), 1.0 + tol) << to_string(label);
  }
}

}  // namespace

TEST(ActivePovm, PerfectDetectorSinglePhoton) {
  auto sp = enumerate_basis({1, PolarizationView::HV}, 2);
  PovmSet set = build_active_povm(active_model(1.0, 1.0), sp);
  int i = sp->index_of({1, 0});
  EXPECT_NEAR(expect(set.at(Outcome::H), i), 1.0, 1e-12);
  EXPECT_NEAR(expect(set.at(Outcome::V), i), 0.0, 1e-12);
  EXPECT_NEAR(expect(set.at(Outcome::HV), i), 0.0, 1e-12);
  EXPECT_NEAR(expect(set.at(Outcome::NoneHV), i), 0.0, 1e-12);
}

// Substituting n_H = n_V = 1 into the click formulas.
TEST(ActivePovm, MismatchedOnePhotonEach) {
  auto sp = enumerate_basis({1, PolarizationView::HV}, 2);
  PovmSet set = build_active_povm(active_model(0.8, 0.5), sp);
  int i = sp->index_of({1, 1});
  EXPECT_NEAR(expect(set.at(Outcome::HV), i), 0.4, 1e-12);
  EXPECT_NEAR(expect(set.at(Outcome::H), i), 0.4, 1e-12);
  EXPECT_NEAR(expect(set.at(Outcome::V), i), 0.1, 1e-12);
  EXPECT_NEAR(expect(set.at(Outcome::NoneHV), i), 0.1, 1e-12);
  double sum = expect(set.at(Outcome::HV), i) + expect(set.at(Outcome::H), i) +
               expect(set.at(Outcome::V), i) + expect(set.at(Outcome::NoneHV), i);
  EXPECT_NEAR(sum, 1.0, 1e-12);
}

TEST(ActivePovm, VacuumNeverClicks) {
  auto sp = enumerate_basis({1, PolarizationView::HV}, 2);
  PovmSet set = build_active_povm(active_model(0.37, 0.91), sp);
  EXPECT_NEAR(expect(set.at(Outcome::NoneHV), 0), 1.0, 1e-12);
  EXPECT_NEAR(expect(set.at(Outcome::NoneDA), 0), 1.0, 1e-12);
}

// Grade projections of M_H: eta1 * |1H><1H| at one photon, and the
// (2,0)/(1,1)/(0,2) diagonal at two photons.
TEST(ActivePovm, GradeProjectionsOfMH) {
  auto sp = enumerate_basis({1, PolarizationView::HV}, 2);
  double e1 = 0.8, e2 = 0.5;
  PovmSet set = build_active_povm(active_model(e1, e2), sp);
  FockOperator g1 = grade_project(set.at(Outcome::H), 1);
  EXPECT_NEAR(expect(g1, sp->index_of({1, 0})), e1, 1e-12);
  EXPECT_NEAR(expect(g1, sp->index_of({0, 1})), 0.0, 1e-12);
  FockOperator g2 = grade_project(set.at(Outcome::H), 2);
  EXPECT_NEAR(expect(g2, sp->index_of({2, 0})), 1.0 - (1.0 - e1) * (1.0 - e1), 1e-12);
  EXPECT_NEAR(expect(g2, sp->index_of({1, 1})), e1 * (1.0 - e2), 1e-12);
  EXPECT_NEAR(expect(g2, sp->index_of({0, 2})), 0.0, 1e-12);
}

TEST(ActivePovm, HvBasisElementsCommute) {
  auto sp = enumerate_basis({1, PolarizationView::HV}, 3);
  PovmSet set = build_active_povm(active_model(0.63, 0.29), sp);
  for (Outcome a : {Outcome::H, Outcome::V, Outcome::HV})
    for (Outcome b : {Outcome::H, Outcome::V, Outcome::HV}) {
      Matrix comm = set.at(a).mat * set.at(b).mat - set.at(b).mat * set.at(a).mat;
      EXPECT_LT(comm.cwiseAbs().maxCoeff(), 1e-12);
    }
}

// Eq.-style tensor rule over two spatial modes: a single click in either
// spatial mode contributes to the global single-click outcome.
TEST(ActivePovm, TwoSpatialModeCompositionOracle) {
  auto global = enumerate_basis({2, PolarizationView::HV}, 3);
  Eigen::MatrixXd etas(2, 2);
  etas << 1.0, 0.45, 0.45, 1.0;
  PovmSet set = build_active_povm(DetectorModel{etas}, global);

  auto mode_space = enumerate_basis({1, PolarizationView::HV}, 3);
  PovmSet m1 = build_active_povm(DetectorModel{etas.row(0)}, mode_space);
  PovmSet m2 = build_active_povm(DetectorModel{etas.row(1)}, mode_space);

  for (int idx = 0; idx < global->dim(); ++idx) {
    const Occupation& occ = global->state(idx);
    Occupation o1 = {occ[0], occ[1]}, o2 = {occ[2], occ[3]};
    int i1 = mode_space->index_of(o1), i2 = mode_space->index_of(o2);
    double mh = expect(m1.at(Outcome::H), i1) * expect(m2.at(Outcome::NoneHV), i2) +
                expect(m1.at(Outcome::NoneHV), i1) * expect(m2.at(Outcome::H), i2) +
                expect(m1.at(Outcome::H), i1) * expect(m2.at(Outcome::H), i2);
    EXPECT_NEAR(expect(set.at(Outcome::H), idx), mh, 1e-12) << "state " << idx;
  }
}

TEST(PassivePovm, PerfectDetectorSinglePhoton) {
  auto sp = enumerate_basis({1, PolarizationView::HV}, 2);
  PovmSet set = build_passive_povm(passive_model(1, 1, 1, 1), sp);
  int i = sp->index_of({1, 0});
  EXPECT_NEAR(expect(set.at(Outcome::H), i), 0.5, 1e-12);
  EXPECT_NEAR(expect(set.at(Outcome::V), i), 0.0, 1e-12);
  EXPECT_NEAR(expect(set.at(Outcome::D), i), 0.25, 1e-12);
  EXPECT_NEAR(expect(set.at(Outcome::A), i), 0.25, 1e-12);
  EXPECT_NEAR(expect(set.at(Outcome::HV), i), 0.0, 1e-12);
  EXPECT_NEAR(expect(set.at(Outcome::DA), i), 0.0, 1e-12);
  EXPECT_NEAR(expect(set.at(Outcome::CC), i), 0.0, 1e-12);
}

TEST(PassivePovm, VacuumNeverClicks) {
  auto sp = enumerate_basis({1, PolarizationView::HV}, 2);
  PovmSet set = build_passive_povm(passive_model(0.9, 0.8, 0.7, 0.6), sp);
  EXPECT_NEAR(expect(set.at(Outcome::None), 0), 1.0, 1e-12);
}

// Single-photon marginal: the splitter halves the photon before an
// eta-efficient detector sees it.
TEST(PassivePovm, SinglePhotonMarginal) {
  for (double eta : {1.0, 0.5}) {
    auto sp = enumerate_basis({1, PolarizationView::HV}, 2);
    PovmSet set = build_passive_povm(passive_model(eta, eta, eta, eta), sp);
    EXPECT_NEAR(expect(set.at(Outcome::H), sp->index_of({1, 0})), eta / 2.0, 1e-12);
  }
}

// Cross-click element computed two ways: identity minus the rest, and the
// direct sum over crossing detector sets.
TEST(PassivePovm, CrossClickTwoRoutes) {
  auto sp = enumerate_basis({1, PolarizationView::HV}, 3);
  Eigen::VectorXd eta(4);
  eta << 1.0, 1.0, 1.0, 1.0;
  PovmSet set = build_passive_povm(passive_model(1, 1, 1, 1), sp);

  Matrix direct = Matrix::Zero(sp->dim(), sp->dim());
  for (unsigned t = 1; t < 16; ++t) {
    bool hv_arm = t & (kDetH | kDetV), da_arm = t & (kDetD | kDetA);
    if (!(hv_arm && da_arm)) continue;  // not a cross click
    for (int g = 0; g <= sp->cutoff(); ++g) {
      Eigen::MatrixXd blk = detail::passive_outcome_set_block(eta, t, g);
      int b = sp->grade_begin(g);
      direct.block(b, b, g + 1, g + 1) += blk;
    }
  }
  EXPECT_LT((set.at(Outcome::CC).mat - direct).cwiseAbs().maxCoeff(), 1e-12);

  int i2d = -1;  // expectation on |2_D, 0_A>: rotate the DA projector
  auto da = enumerate_basis({1, PolarizationView::DA}, 3);
  Matrix proj = Matrix::Zero(da->dim(), da->dim());
  proj(da->index_of({2, 0}), da->index_of({2, 0})) = 1.0;
  FockOperator in_hv = basis_rotate(FockOperator(da, proj));
  double val_sub = (set.at(Outcome::CC).mat * in_hv.mat).trace().real();
  double val_dir = (direct * in_hv.mat).trace().real();
  EXPECT_NEAR(val_sub, val_dir, 1e-12);
  (void)i2d;
}

TEST(PovmProperties, RandomModelsBothSchemes) {
  std::mt19937 rng(101);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 3; ++trial) {
    for (int smodes : {1, 2}) {
      auto sp = enumerate_basis({smodes, PolarizationView::HV}, 3);
      Eigen::MatrixXd ea(smodes, 2), ep(smodes, 4);
      for (int r = 0; r < smodes; ++r) {
        for (int c = 0; c < 2; ++c) ea(r, c) = u(rng);
        for (int c = 0; c < 4; ++c) ep(r, c) = u(rng);
      }
      PovmSet active = build_active_povm(DetectorModel{ea}, sp);
      check_completeness(active);
      check_psd_and_blocks(active);
      PovmSet passive = build_passive_povm(DetectorModel{ep}, sp);
      check_completeness(passive);
      check_psd_and_blocks(passive);
    }
  }
}

TEST(PovmProperties, FourSpatialModePassive) {
  std::mt19937 rng(313);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  auto sp = enumerate_basis({4, PolarizationView::HV}, 2);
  Eigen::MatrixXd ep(4, 4);
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < 4; ++c) ep(r, c) = u(rng);
  PovmSet set = build_passive_povm(DetectorModel{ep}, sp);
  check_completeness(set);
  check_psd_and_blocks(set);
}

TEST(PovmRelations, ActiveAndPassiveOrderings) {
  auto sp = enumerate_basis({1, PolarizationView::HV}, 2);
  PovmSet active = build_active_povm(active_model(1.0, 0.5), sp);
  PovmRelationReport ra = verify_povm_relations(active);
  EXPECT_TRUE(ra.ok());

  SchemeConfig pc{Scheme::passive, 4, 0.5};
  auto sp4 = enumerate_basis({4, PolarizationView::HV}, 2);
  PovmSet passive = build_passive_povm(symmetric_eta_model(pc, 0.2), sp4);
  PovmRelationReport rp = verify_povm_relations(passive);
  EXPECT_TRUE(rp.ok());
  EXPECT_EQ(int(rp.checks.size()), 8);
}

TEST(PovmRelations, NoClickMinusSquarePsd) {
  auto sp = enumerate_basis({1, PolarizationView::HV}, 3);
  PovmSet set = build_passive_povm(passive_model(0.7, 0.2, 0.9, 0.4), sp);
  const Matrix& m = set.at(Outcome::None).mat;
  EXPECT_GT(testsupport::min_eigenvalue(Matrix(m - m * m)), -1e-12);
}

// Factoring a common transmittance out of every detector is the same as a
// loss channel in front of the renormalized device.
TEST(Renormalization, EquivalenceBothSchemes) {
  std::mt19937 rng(2024);
  std::uniform_real_distribution<double> u(0.1, 1.0);
  for (int trial = 0; trial < 2; ++trial) {
    double eta0 = u(rng);
    for (int smodes : {1, 2}) {
      auto sp = enumerate_basis({smodes, PolarizationView::HV}, 3);
      Eigen::MatrixXd base(smodes, 2);
      for (int r = 0; r < smodes; ++r)
        for (int c = 0; c < 2; ++c) base(r, c) = u(rng);
      PovmSet relative = build_active_povm(DetectorModel{base}, sp);
      PovmSet absolute = build_active_povm(DetectorModel{eta0 * base.array()}, sp);
      for (Outcome o : outcome_alphabet(Scheme::active)) {
        FockOperator pulled = loss_adjoint(relative.at(o), eta0);
        EXPECT_LT((pulled.mat - absolute.at(o).mat).cwiseAbs().maxCoeff(), 1e-10)
            << "active " << to_string(o);
      }
    }
    auto sp = enumerate_basis({1, PolarizationView::HV}, 3);
    Eigen::MatrixXd base(1, 4);
    for (int c = 0; c < 4; ++c) base(0, c) = u(rng);
    PovmSet relative = build_passive_povm(DetectorModel{base}, sp);
    PovmSet absolute = build_passive_povm(DetectorModel{eta0 * base.array()}, sp);
    for (Outcome o : outcome_alphabet(Scheme::passive)) {
      FockOperator pulled = loss_adjoint(relative.at(o), eta0);
      EXPECT_LT((pulled.mat - absolute.at(o).mat).cwiseAbs().maxCoeff(), 1e-10)
          << "passive " << to_string(o);
    }
  }
}

int main(int argc, char** argv) {
  ::testing::InitGoogleTest(&argc, argv);
  return RUN_ALL_TESTS();
}
