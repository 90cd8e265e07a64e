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

#ifndef EVMVERIFY_POVM_HPP
#define EVMVERIFY_POVM_HPP

#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "evmverify/detectors.hpp"
#include "evmverify/fock.hpp"

namespace evmverify {

/// Click-pattern outcome labels. NoneHV/NoneDA are the per-basis no-click
/// outcomes of the active scheme; None and CC exist only in the passive one.
enum class Outcome { None, NoneHV, NoneDA, H, V, D, A, HV, DA, CC };

inline std::string to_string(Outcome o) {
  switch (o) {
    case Outcome::None: return "none";
    case Outcome::NoneHV: return "none_hv";
    case Outcome::NoneDA: return "none_da";
    case Outcome::H: return "H";
    case Outcome::V: return "V";
    case Outcome::D: return "D";
    case Outcome::A: return "A";
    case Outcome::HV: return "HV";
    case Outcome::DA: return "DA";
    case Outcome::CC: return "CC";
  }
  return "?";
}

inline Outcome outcome_from_string(const std::string& s) {
  for (Outcome o : {Outcome::None, Outcome::NoneHV, Outcome::NoneDA, Outcome::H, Outcome::V,
                    Outcome::D, Outcome::A, Outcome::HV, Outcome::DA, Outcome::CC})
    if (to_string(o) == s) return o;
  throw std::invalid_argument("unknown outcome label '" + s + "'");
}

inline const std::vector<Outcome>& outcome_alphabet(Scheme scheme) {
  static const std::vector<Outcome> active = {Outcome::NoneHV, Outcome::H,  Outcome::V,
                                              Outcome::HV,     Outcome::NoneDA, Outcome::D,
                                              Outcome::A,      Outcome::DA};
  static const std::vector<Outcome> passive = {Outcome::None, Outcome::H,  Outcome::V,
                                               Outcome::D,    Outcome::A,  Outcome::HV,
                                               Outcome::DA,   Outcome::CC};
  return scheme == Scheme::active ? active : passive;
}

struct PovmSet {
  SchemeConfig config;
  DetectorModel model;
  SpacePtr space;
  std::map<Outcome, FockOperator> elements;

  const FockOperator& at(Outcome o) const { return elements.at(o); }
};

namespace detail {

/// Coefficient of (h^dag)^q (v^dag)^(g-q) in ((h+v)/sqrt2)^kd ((h-v)/sqrt2)^ka.
inline std::vector<double> da_monomial_poly(int kd, int ka) {
  int g = kd + ka;
  std::vector<double> out(g + 1, 0.0);
  for (int q = 0; q <= g; ++q) {
    double s = 0.0;
    for (int j = std::max(0, q - ka); j <= std::min(kd, q); ++j)
      s += binomial(kd, j) * binomial(ka, q - j) * ((ka - (q - j)) % 2 == 0 ? 1.0 : -1.0);
    out[q] = s * std::pow(0.5, 0.5 * g);
  }
  return out;
}

/// (h^dag)^kh (v^dag)^kv (d^dag)^kd (a^dag)^ka |0> on the grade-k basis of a
/// single spatial mode, coordinates ordered |k,0>, |k-1,1>, ..., |0,k>.
inline Eigen::VectorXd creation_vector(int kh, int kv, int kd, int ka) {
  int k = kh + kv + kd + ka;
  Eigen::VectorXd v = Eigen::VectorXd::Zero(k + 1);
  std::vector<double> poly = da_monomial_poly(kd, ka);
  for (int q = 0; q <= kd + ka; ++q) {
    if (poly[q] == 0.0) continue;
    int p = kh + q;  // total h power; v power is k - p
    v(k - p) += poly[q] * std::sqrt(factorial(p) * factorial(k - p));
  }
  return v;
}

/// Passive-scheme single-spatial-mode building block: the operator for
/// "every detector outside U stays silent" at a fixed photon grade. Columns
/// of the underlying sum run over creation-power splittings; detectors in U
/// absorb their (det + loss) binomial into a plain 1/2 per photon.
inline Eigen::MatrixXd passive_subset_block(const Eigen::VectorXd& eta_row, unsigned u_mask,
                                            int grade) {
  Eigen::MatrixXd block = Eigen::MatrixXd::Zero(grade + 1, grade + 1);
  for (int kh = 0; kh <= grade; ++kh)
    for (int kv = 0; kv <= grade - kh; ++kv)
      for (int kd = 0; kd <= grade - kh - kv; ++kd) {
        int ka = grade - kh - kv - kd;
        int k[4] = {kh, kv, kd, ka};
        double w = 1.0;
        for (int x = 0; x < 4; ++x) {
          double per_photon = (u_mask >> x) & 1u ? 0.5 : 0.5 * (1.0 - eta_row(x));
          w *= std::pow(per_photon, k[x]) / factorial(k[x]);
        }
        if (w == 0.0) continue;
        Eigen::VectorXd v = creation_vector(kh, kv, kd, ka);
        block.noalias() += w * (v * v.transpose());
      }
  return block;
}

/// Exact-outcome-set operator at one grade of one spatial mode, by
/// inclusion-exclusion over silent-detector subsets.
inline Eigen::MatrixXd passive_outcome_set_block(const Eigen::VectorXd& eta_row,
                                                 unsigned set_mask, int grade) {
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(grade + 1, grade + 1);
  // Iterate U over subsets of set_mask.
  unsigned u = set_mask;
  while (true) {
    int parity = __builtin_popcount(set_mask) - __builtin_popcount(u);
    out += (parity % 2 == 0 ? 1.0 : -1.0) * passive_subset_block(eta_row, u, grade);
    if (u == 0) break;
    u = (u - 1) & set_mask;
  }
  return out;
}

}  // namespace detail

/// Detector bit positions for passive outcome-set masks.
enum : unsigned { kDetH = 1u, kDetV = 2u, kDetD = 4u, kDetA = 8u };

/// Active scheme: all eight POVM elements (both basis choices), in canonical
/// HV coordinates. Elements are exact per photon-number grade.
inline PovmSet build_active_povm(const DetectorModel& model, const SpacePtr& space) {
  SchemeConfig config{Scheme::active, model.spatial_modes(), 0.5};
  validate_model(config, model);
  if (space->modes().spatial_modes != model.spatial_modes())
    throw std::invalid_argument("build_active_povm: space/model spatial modes differ");
  if (space->cutoff() < 1)
    throw std::invalid_argument("build_active_povm: cutoff must be >= 1");

  PovmSet set{config, model, space, {}};
  const int d = space->dim();
  // Diagonal elements for a basis view: per-detector no-click products.
  auto basis_elements = [&](const SpacePtr& sp) {
    std::map<Outcome, Matrix> m;
    Eigen::VectorXd q1(d), q2(d);
    for (int i = 0; i < d; ++i) {
      const Occupation& occ = sp->state(i);
      double a = 1.0, b = 1.0;
      for (int s = 0; s < model.spatial_modes(); ++s) {
        a *= std::pow(1.0 - model.efficiencies(s, 0), occ[2 * s]);
        b *= std::pow(1.0 - model.efficiencies(s, 1), occ[2 * s + 1]);
      }
      q1(i) = a;
      q2(i) = b;
    }
    m[Outcome::None] = (q1.array() * q2.array()).matrix().asDiagonal();
    m[Outcome::H] = ((1.0 - q1.array()) * q2.array()).matrix().asDiagonal();
    m[Outcome::V] = (q1.array() * (1.0 - q2.array())).matrix().asDiagonal();
    m[Outcome::HV] = ((1.0 - q1.array()) * (1.0 - q2.array())).matrix().asDiagonal();
    return m;
  };

  auto hv = basis_elements(space);
  set.elements.emplace(Outcome::NoneHV, FockOperator(space, hv[Outcome::None]));
  set.elements.emplace(Outcome::H, FockOperator(space, hv[Outcome::H]));
  set.elements.emplace(Outcome::V, FockOperator(space, hv[Outcome::V]));
  set.elements.emplace(Outcome::HV, FockOperator(space, hv[Outcome::HV]));

  // The D/A-basis elements are the same formulas in the rotated view.
  SpacePtr da_space = space->with_view(PolarizationView::DA);
  auto da = basis_elements(da_space);
  auto rotate_in = [&](Matrix m) {
    return basis_rotate(FockOperator(da_space, std::move(m)));
  };
  auto fix_space = [&](FockOperator op) {
    return FockOperator(space, std::move(op.mat));
  };
  set.elements.emplace(Outcome::NoneDA, fix_space(rotate_in(da[Outcome::None])));
  set.elements.emplace(Outcome::D, fix_space(rotate_in(da[Outcome::H])));
  set.elements.emplace(Outcome::A, fix_space(rotate_in(da[Outcome::V])));
  set.elements.emplace(Outcome::DA, fix_space(rotate_in(da[Outcome::HV])));
  return set;
}

/// Passive scheme: the eight outcome elements on the full truncated space.
/// Single-click and double-click elements come from the grade-wise
/// creation-operator sums composed over spatial modes; the cross-click
/// element is identity minus the rest.
inline PovmSet build_passive_povm(const DetectorModel& model, const SpacePtr& space) {
  SchemeConfig config{Scheme::passive, model.spatial_modes(), 0.5};
  validate_model(config, model);
  if (space->modes().spatial_modes != model.spatial_modes())
    throw std::invalid_argument("build_passive_povm: space/model spatial modes differ");
  if (space->cutoff() < 1)
    throw std::invalid_argument("build_passive_povm: cutoff must be >= 1");

  const int d = space->dim();
  const int s_count = model.spatial_modes();
  const int cutoff = space->cutoff();

  // Per-mode, per-subset, per-grade blocks.
  auto mode_block = [&](int s, unsigned u, int grade) {
    return detail::passive_subset_block(model.efficiencies.row(s), u, grade);
  };

  // Tensor over spatial modes of the subset-U operators, as a full-space
  // matrix. Entries couple equal per-mode grade patterns only.
  std::map<unsigned, Matrix> subset_cache;
  auto tensor_subset = [&](unsigned u) -> const Matrix& {
    auto it = subset_cache.find(u);
    if (it != subset_cache.end()) return it->second;
    Matrix out = Matrix::Zero(d, d);
    std::vector<std::vector<Eigen::MatrixXd>> blocks(s_count);
    for (int s = 0; s < s_count; ++s)
      for (int g = 0; g <= cutoff; ++g) blocks[s].push_back(mode_block(s, u, g));
    for (int col = 0; col < d; ++col) {
      const Occupation& oc = space->state(col);
      for (int row = 0; row < d; ++row) {
        const Occupation& orow = space->state(row);
        double val = 1.0;
        for (int s = 0; s < s_count && val != 0.0; ++s) {
          int gr = orow[2 * s] + orow[2 * s + 1];
          int gc = oc[2 * s] + oc[2 * s + 1];
          if (gr != gc) {
            val = 0.0;
            break;
          }
          // Within a grade the basis runs |g,0>, ..., |0,g>; the v-count
          // is the in-grade coordinate.
          val *= blocks[s][gr](orow[2 * s + 1], oc[2 * s + 1]);
        }
        if (val != 0.0) out(row, col) = val;
      }
    }
    return subset_cache.emplace(u, std::move(out)).first->second;
  };

  // Exact global outcome-set operator via inclusion-exclusion.
  auto outcome_set_op = [&](unsigned t_mask) {
    Matrix out = Matrix::Zero(d, d);
    unsigned u = t_mask;
    while (true) {
      int parity = __builtin_popcount(t_mask) - __builtin_popcount(u);
      out += (parity % 2 == 0 ? 1.0 : -1.0) * tensor_subset(u);
      if (u == 0) break;
      u = (u - 1) & t_mask;
    }
    return out;
  };

  PovmSet set{config, model, space, {}};
  Matrix none = outcome_set_op(0);
  Matrix mh = outcome_set_op(kDetH);
  Matrix mv = outcome_set_op(kDetV);
  Matrix md = outcome_set_op(kDetD);
  Matrix ma = outcome_set_op(kDetA);
  Matrix mhv = outcome_set_op(kDetH | kDetV);
  Matrix mda = outcome_set_op(kDetD | kDetA);
  Matrix mcc = Matrix::Identity(d, d) - none - mh - mv - md - ma - mhv - mda;
  set.elements.emplace(Outcome::None, FockOperator(space, std::move(none)));
  set.elements.emplace(Outcome::H, FockOperator(space, std::move(mh)));
  set.elements.emplace(Outcome::V, FockOperator(space, std::move(mv)));
  set.elements.emplace(Outcome::D, FockOperator(space, std::move(md)));
  set.elements.emplace(Outcome::A, FockOperator(space, std::move(ma)));
  set.elements.emplace(Outcome::HV, FockOperator(space, std::move(mhv)));
  set.elements.emplace(Outcome::DA, FockOperator(space, std::move(mda)));
  FockOperator cc(space, std::move(mcc));
  if (cc.hermiticity_defect() > 1e-12)
    throw std::runtime_error("build_passive_povm: cross-click element not Hermitian");
  set.elements.emplace(Outcome::CC, std::move(cc));
  return set;
}

inline PovmSet build_povm(const SchemeConfig& config, const DetectorModel& model,
                          const SpacePtr& space) {
  return config.scheme == Scheme::active ? build_active_povm(model, space)
                                         : build_passive_povm(model, space);
}

/// Per-check minimum eigenvalues for the operator-ordering relations:
/// M_i - M_i M_j within each active basis, M_i - M_i^2 for passive.
struct PovmRelationReport {
  struct Check {
    Outcome left, right;
    double min_eigenvalue;
  };
  std::vector<Check> checks;
  double worst = 0.0;
  bool ok(double tol = 1e-10) const { return worst > -tol; }
};

inline PovmRelationReport verify_povm_relations(const PovmSet& set) {
  PovmRelationReport report;
  auto add = [&](Outcome i, Outcome j) {
    const Matrix& a = set.at(i).mat;
    const Matrix& b = set.at(j).mat;
    Matrix diff = a - 0.5 * (a * b + b * a);  // symmetrized product, equal when [a,b]=0
    Eigen::SelfAdjointEigenSolver<Matrix> es(diff, Eigen::EigenvaluesOnly);
    report.checks.push_back({i, j, es.eigenvalues().minCoeff()});
  };
  if (set.config.scheme == Scheme::active) {
    const std::vector<Outcome> hv = {Outcome::H, Outcome::V, Outcome::HV};
    const std::vector<Outcome> da = {Outcome::D, Outcome::A, Outcome::DA};
    for (const auto& basis : {hv, da})
      for (Outcome i : basis)
        for (Outcome j : basis) add(i, j);
  } else {
    for (Outcome o : outcome_alphabet(Scheme::passive)) add(o, o);
  }
  report.worst = 0.0;
  for (const auto& c : report.checks) report.worst = std::min(report.worst, c.min_eigenvalue);
  return report;
}

}  // namespace evmverify

#endif  // EVMVERIFY_POVM_HPP
