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

#ifndef EVMVERIFY_IDEALOPS_HPP
#define EVMVERIFY_IDEALOPS_HPP

#include <map>
#include <set>
#include <string>
#include <vector>

#include "evmverify/povm.hpp"

namespace evmverify {

/// Photon pattern across spatial modes; the support key for ideal operators.
using SpatialPattern = std::vector<int>;

enum class OpKind { Identity, Measurement, Ideal };

/// One operator of Bob's EVM list. Ideal operators are supported on exactly
/// one photon pattern; measurement operators and the identity span all
/// grades.
struct BobOp {
  std::string name;
  Matrix mat;
  OpKind kind = OpKind::Ideal;
  int grade = -1;               // -1 for full-support operators
  SpatialPattern pattern;       // empty for full-support operators
  bool real = true;
  bool pattern_identity = false;  // the I_{gxg}-style projector of its pattern
  Outcome outcome = Outcome::None;  // meaningful for measurement ops
};

struct RelationTables {
  /// Unordered commuting pairs exploited by the constraint generator.
  std::set<std::pair<int, int>> commuting;
  /// Unordered pairs with orthogonal supports (product vanishes).
  std::set<std::pair<int, int>> orthogonal;
  /// Ordered same-pattern ideal products B_j B_l = sum_m coeff * B_m.
  std::map<std::pair<int, int>, std::vector<std::pair<int, Complex>>> products;
  /// Pattern projections of identity/measurement ops: (op, pattern id) ->
  /// real coefficients over ideal-op indices.
  std::map<std::pair<int, int>, std::vector<std::pair<int, double>>> projections;
};

struct OperatorDictionary {
  SchemeConfig config;
  DetectorModel model;
  SpacePtr space;
  PovmSet povm;
  std::vector<BobOp> bob_ops;             // [0] is the identity
  std::vector<int> measurement_indices;   // non-identity measurement ops
  std::vector<int> ideal_indices;
  std::vector<SpatialPattern> patterns;   // pattern id -> pattern
  std::vector<int> pattern_of;            // per bob op; -1 for full ops
  std::vector<int> pattern_identity_of;   // pattern id -> op index of its identity
  RelationTables relations;

  int bob_count() const { return int(bob_ops.size()); }
  int evm_dim() const { return 2 * bob_count(); }

  int pattern_id(const SpatialPattern& p) const {
    for (size_t i = 0; i < patterns.size(); ++i)
      if (patterns[i] == p) return int(i);
    return -1;
  }
};

struct ProjectionDecomposition {
  Outcome povm_label;
  int grade;
  std::map<std::string, double> coefficients;
  double residual;
};

namespace detail {

inline Matrix qubit_sigma_y() {
  Matrix m(2, 2);
  m << Complex(0, 0), Complex(0, -1), Complex(0, 1), Complex(0, 0);
  return m;
}

inline Matrix spin1_sy() {
  double s = 1.0 / std::sqrt(2.0);
  Matrix m = Matrix::Zero(3, 3);
  m(0, 1) = Complex(0, -s);
  m(1, 0) = Complex(0, s);
  m(1, 2) = Complex(0, -s);
  m(2, 1) = Complex(0, s);
  return m;
}

/// Places a small operator acting on the listed global basis indices.
inline Matrix embed(const SpacePtr& space, const std::vector<int>& idx, const Matrix& small) {
  Matrix m = Matrix::Zero(space->dim(), space->dim());
  for (int r = 0; r < small.rows(); ++r)
    for (int c = 0; c < small.cols(); ++c)
      if (small(r, c) != Complex(0, 0)) m(idx[r], idx[c]) = small(r, c);
  return m;
}

inline Occupation unit_occ(int modes, int slot, int count) {
  Occupation o(modes, 0);
  o[slot] = count;
  return o;
}

}  // namespace detail

/// Least-squares decomposition of `target` over the span of `basis_ops`
/// restricted to Frobenius inner products. Returns coefficients and residual.
inline std::pair<Eigen::VectorXcd, double> span_decompose(
    const Matrix& target, const std::vector<const Matrix*>& basis_ops) {
  int n = int(basis_ops.size());
  auto frob = [](const Matrix& a, const Matrix& b) {
    return a.conjugate().cwiseProduct(b).sum();
  };
  Eigen::MatrixXcd gram(n, n);
  Eigen::VectorXcd rhs(n);
  for (int a = 0; a < n; ++a) {
    for (int b = 0; b < n; ++b) gram(a, b) = frob(*basis_ops[a], *basis_ops[b]);
    rhs(a) = frob(*basis_ops[a], target);
  }
  Eigen::VectorXcd coeff = gram.completeOrthogonalDecomposition().solve(rhs);
  Matrix recon = Matrix::Zero(target.rows(), target.cols());
  for (int a = 0; a < n; ++a) recon += coeff(a) * (*basis_ops[a]);
  double residual = (recon - target).cwiseAbs().maxCoeff();
  return {coeff, residual};
}

/// Builds Bob's operator list: the identity, the linearly independent
/// measurement elements, and the perfect-efficiency ideal operators on the
/// photon patterns of up to two photons (one photon only, for the
/// multi-spatial-mode passive case).
inline OperatorDictionary build_dictionary(const SchemeConfig& config,
                                           const DetectorModel& model, const SpacePtr& space) {
  validate_model(config, model);
  if (space->cutoff() < 1)
    throw std::invalid_argument("build_dictionary: cutoff must be >= 1");
  const int mcount = config.spatial_modes;
  const bool active = config.scheme == Scheme::active;
  if (active && mcount > 2)
    throw std::invalid_argument("build_dictionary: active scheme supports 1 or 2 spatial modes");
  if (!active && mcount != 1 && mcount != 4)
    throw std::invalid_argument("build_dictionary: passive scheme supports 1 or 4 spatial modes");
  const bool with_two_photon =
      space->cutoff() >= 2 && (active || mcount == 1);

  OperatorDictionary dict;
  dict.config = config;
  dict.model = model;
  dict.space = space;
  dict.povm = build_povm(config, model, space);

  const int d = space->dim();
  auto add = [&](BobOp op) {
    dict.bob_ops.push_back(std::move(op));
    return int(dict.bob_ops.size()) - 1;
  };

  add({"I", Matrix::Identity(d, d), OpKind::Identity, -1, {}, true, false, Outcome::None});
  std::vector<Outcome> meas = {Outcome::H, Outcome::V, Outcome::HV,
                               Outcome::D, Outcome::A, Outcome::DA};
  if (!active) meas.push_back(Outcome::CC);
  for (Outcome o : meas) {
    int idx = add({"M_" + to_string(o), dict.povm.at(o).mat, OpKind::Measurement, -1, {},
                   true, false, o});
    dict.measurement_indices.push_back(idx);
  }

  auto add_pattern = [&](const SpatialPattern& p) {
    dict.patterns.push_back(p);
    dict.pattern_identity_of.push_back(-1);
    return int(dict.patterns.size()) - 1;
  };
  auto tag = [&](int mode) {
    return mcount == 1 ? std::string() : "[" + std::to_string(mode + 1) + "]";
  };

  // S0: the vacuum projector.
  {
    int pid = add_pattern(SpatialPattern(mcount, 0));
    int idx = add({"Vac", vacuum_projector(space).mat, OpKind::Ideal, 0,
                   dict.patterns[pid], true, true, Outcome::None});
    dict.ideal_indices.push_back(idx);
    dict.pattern_identity_of[pid] = idx;
  }

  // S1,m: one photon in spatial mode m.
  for (int m = 0; m < mcount; ++m) {
    SpatialPattern p(mcount, 0);
    p[m] = 1;
    int pid = add_pattern(p);
    std::vector<int> idx = {space->index_of(detail::unit_occ(2 * mcount, 2 * m, 1)),
                            space->index_of(detail::unit_occ(2 * mcount, 2 * m + 1, 1))};
    Matrix i2 = Matrix::Identity(2, 2);
    Matrix h1 = Matrix::Zero(2, 2);
    h1(0, 0) = 1.0;
    Matrix d1 = Matrix::Constant(2, 2, 0.5);
    int id_idx = add({"I2" + tag(m), detail::embed(space, idx, i2), OpKind::Ideal, 1, p,
                      true, true, Outcome::None});
    dict.pattern_identity_of[pid] = id_idx;
    dict.ideal_indices.push_back(id_idx);
    dict.ideal_indices.push_back(add({"MH1" + tag(m), detail::embed(space, idx, h1),
                                      OpKind::Ideal, 1, p, true, false, Outcome::None}));
    dict.ideal_indices.push_back(add({"MD1" + tag(m), detail::embed(space, idx, d1),
                                      OpKind::Ideal, 1, p, true, false, Outcome::None}));
    dict.ideal_indices.push_back(add({"sy" + tag(m),
                                      detail::embed(space, idx, detail::qubit_sigma_y()),
                                      OpKind::Ideal, 1, p, false, false, Outcome::None}));
  }

  if (with_two_photon) {
    // S2,m: two photons in one spatial mode.
    for (int m = 0; m < mcount; ++m) {
      SpatialPattern p(mcount, 0);
      p[m] = 2;
      int pid = add_pattern(p);
      Occupation two_h = detail::unit_occ(2 * mcount, 2 * m, 2);
      Occupation one_one(2 * mcount, 0);
      one_one[2 * m] = 1;
      one_one[2 * m + 1] = 1;
      Occupation two_v = detail::unit_occ(2 * mcount, 2 * m + 1, 2);
      std::vector<int> idx = {space->index_of(two_h), space->index_of(one_one),
                              space->index_of(two_v)};
      Matrix i3 = Matrix::Identity(3, 3);
      Matrix h2 = Matrix::Zero(3, 3);
      h2(0, 0) = 1.0;
      Matrix v2 = Matrix::Zero(3, 3);
      v2(2, 2) = 1.0;
      Eigen::VectorXcd vd(3), va(3);
      vd << 0.5, std::sqrt(2.0) / 2.0, 0.5;
      va << 0.5, -std::sqrt(2.0) / 2.0, 0.5;
      Matrix d2 = vd * vd.adjoint();
      Matrix a2 = va * va.adjoint();
      int id_idx = add({"I3" + tag(m), detail::embed(space, idx, i3), OpKind::Ideal, 2, p,
                        true, true, Outcome::None});
      dict.pattern_identity_of[pid] = id_idx;
      dict.ideal_indices.push_back(id_idx);
      for (auto& [nm, mat] : std::vector<std::pair<std::string, Matrix>>{
               {"MH2", h2}, {"MV2", v2}, {"MD2", d2}, {"MA2", a2}})
        dict.ideal_indices.push_back(add({nm + tag(m), detail::embed(space, idx, mat),
                                          OpKind::Ideal, 2, p, true, false, Outcome::None}));
      dict.ideal_indices.push_back(add({"Sy" + tag(m),
                                        detail::embed(space, idx, detail::spin1_sy()),
                                        OpKind::Ideal, 2, p, false, false, Outcome::None}));
    }
    // S2,m+m': one photon in each of two spatial modes; each mode is a qubit.
    for (int m1 = 0; m1 < mcount; ++m1)
      for (int m2 = m1 + 1; m2 < mcount; ++m2) {
        SpatialPattern p(mcount, 0);
        p[m1] = 1;
        p[m2] = 1;
        int pid = add_pattern(p);
        std::vector<int> idx;
        for (int pol1 = 0; pol1 < 2; ++pol1)
          for (int pol2 = 0; pol2 < 2; ++pol2) {
            Occupation o(2 * mcount, 0);
            o[2 * m1 + pol1] = 1;
            o[2 * m2 + pol2] = 1;
            idx.push_back(space->index_of(o));
          }
        Matrix i2 = Matrix::Identity(2, 2);
        Matrix h1 = Matrix::Zero(2, 2);
        h1(0, 0) = 1.0;
        Matrix d1 = Matrix::Constant(2, 2, 0.5);
        Matrix sy = detail::qubit_sigma_y();
        std::string t = "[" + std::to_string(m1 + 1) + "+" + std::to_string(m2 + 1) + "]";
        int id_idx = add({"I2xI2" + t, detail::embed(space, idx, kron(i2, i2)),
                          OpKind::Ideal, 2, p, true, true, Outcome::None});
        dict.pattern_identity_of[pid] = id_idx;
        dict.ideal_indices.push_back(id_idx);
        auto addq = [&](const std::string& nm, const Matrix& mat, bool real) {
          dict.ideal_indices.push_back(
              add({nm + t, detail::embed(space, idx, mat), OpKind::Ideal, 2, p, real, false,
                   Outcome::None}));
        };
        addq("MH1xI", kron(h1, i2), true);
        addq("MD1xI", kron(d1, i2), true);
        addq("syxI", kron(sy, i2), false);
        addq("IxMH1", kron(i2, h1), true);
        addq("IxMD1", kron(i2, d1), true);
        addq("Ixsy", kron(i2, sy), false);
      }
  }

  dict.pattern_of.assign(dict.bob_count(), -1);
  for (int i = 0; i < dict.bob_count(); ++i)
    if (dict.bob_ops[i].kind == OpKind::Ideal)
      dict.pattern_of[i] = dict.pattern_id(dict.bob_ops[i].pattern);
  return dict;
}

inline RelationTables relation_tables(const OperatorDictionary& dict);

inline OperatorDictionary build_dictionary_with_relations(const SchemeConfig& config,
                                                          const DetectorModel& model,
                                                          const SpacePtr& space) {
  OperatorDictionary dict = build_dictionary(config, model, space);
  dict.relations = relation_tables(dict);
  return dict;
}

/// Indices of the ideal operators supported on one pattern.
inline std::vector<int> pattern_members(const OperatorDictionary& dict, int pid) {
  std::vector<int> out;
  for (int i = 0; i < dict.bob_count(); ++i)
    if (dict.pattern_of[i] == pid) out.push_back(i);
  return out;
}

/// Populates the relation metadata: commuting pairs, orthogonal-support
/// pairs, same-pattern product rewrites, and the pattern projections of
/// the identity and measurement operators. Products touching an ideal
/// operator have finite support, so every numeric check here is exact on
/// the truncated space.
inline RelationTables relation_tables(const OperatorDictionary& dict) {
  RelationTables rel;
  const auto& ops = dict.bob_ops;
  const int n = dict.bob_count();

  // Orthogonality: ideal operators on different patterns.
  for (int j = 1; j < n; ++j)
    for (int l = j + 1; l < n; ++l)
      if (ops[j].kind == OpKind::Ideal && ops[l].kind == OpKind::Ideal &&
          dict.pattern_of[j] != dict.pattern_of[l])
        rel.orthogonal.insert({j, l});

  // Commuting pairs the generator exploits: measurement pairs sharing a
  // basis (diagonal in the same number basis), the identity against each
  // measurement element, and the identity against the vacuum projector.
  auto basis_of = [](Outcome o) {
    switch (o) {
      case Outcome::H:
      case Outcome::V:
      case Outcome::HV:
        return 1;
      case Outcome::D:
      case Outcome::A:
      case Outcome::DA:
        return 2;
      default:
        return 0;
    }
  };
  if (dict.config.scheme == Scheme::active) {
    for (int a : dict.measurement_indices)
      for (int b : dict.measurement_indices)
        if (a < b && basis_of(ops[a].outcome) == basis_of(ops[b].outcome))
          rel.commuting.insert({a, b});
  } else {
    // Passive elements all commute with the no-click operator's basis only
    // in special cases; no structural pair is exploited beyond the identity.
  }
  for (int m : dict.measurement_indices) rel.commuting.insert({0, m});
  for (int i : dict.ideal_indices)
    if (ops[i].grade == 0) rel.commuting.insert({0, i});

  // Same-pattern ideal products (pattern identity excluded from the pair
  // list, allowed in the rewrite).
  for (int j : dict.ideal_indices)
    for (int l : dict.ideal_indices) {
      if (ops[j].pattern_identity || ops[l].pattern_identity) continue;
      if (dict.pattern_of[j] != dict.pattern_of[l]) continue;
      Matrix prod = ops[j].mat * ops[l].mat;
      std::vector<int> members = pattern_members(dict, dict.pattern_of[j]);
      std::vector<const Matrix*> basis;
      for (int m : members) basis.push_back(&ops[m].mat);
      auto [coeff, residual] = span_decompose(prod, basis);
      if (residual < 1e-10) {
        std::vector<std::pair<int, Complex>> terms;
        for (size_t a = 0; a < members.size(); ++a)
          if (std::abs(coeff(a)) > 1e-12) terms.emplace_back(members[a], coeff(a));
        rel.products[{j, l}] = std::move(terms);
      }
    }

  // Pattern projections of the identity and of each measurement element.
  // In the passive scheme with unequal D/A efficiencies the two-photon
  // blocks pick up cross terms outside the standard ideal span; such
  // projections are simply not recorded, and the generator falls back to
  // the weaker relations that remain valid.
  for (int x = 0; x < n; ++x) {
    if (ops[x].kind == OpKind::Ideal) continue;
    for (size_t pid = 0; pid < dict.patterns.size(); ++pid) {
      std::vector<int> members = pattern_members(dict, int(pid));
      std::vector<const Matrix*> basis;
      for (int m : members) basis.push_back(&ops[m].mat);
      // Project x onto the pattern block: mask rows/cols of that pattern.
      const SpatialPattern& pat = dict.patterns[pid];
      Matrix masked = Matrix::Zero(dict.space->dim(), dict.space->dim());
      const FockSpace& sp = *dict.space;
      std::vector<int> block_idx;
      for (int i = 0; i < sp.dim(); ++i) {
        const Occupation& occ = sp.state(i);
        bool match = true;
        for (int s = 0; s < dict.config.spatial_modes && match; ++s)
          if (occ[2 * s] + occ[2 * s + 1] != pat[s]) match = false;
        if (match) block_idx.push_back(i);
      }
      for (int r : block_idx)
        for (int c : block_idx) masked(r, c) = ops[x].mat(r, c);
      auto [coeff, residual] = span_decompose(masked, basis);
      if (residual > 1e-10) continue;
      std::vector<std::pair<int, double>> terms;
      bool real_ok = true;
      for (size_t a = 0; a < members.size(); ++a) {
        if (std::abs(coeff(a).imag()) > 1e-11) real_ok = false;
        if (std::abs(coeff(a).real()) > 1e-12)
          terms.emplace_back(members[a], coeff(a).real());
      }
      if (!real_ok) continue;
      rel.projections[{x, int(pid)}] = std::move(terms);
    }
  }
  return rel;
}

/// Spec'd single-grade decomposition of a measurement element: the grade's
/// block written over the ideal operators (summed across the grade's
/// spatial patterns).
inline ProjectionDecomposition decompose_projection(const PovmSet& povm, Outcome label,
                                                    int grade,
                                                    const OperatorDictionary& dict) {
  if (grade > 2) throw std::invalid_argument("decompose_projection: grade must be <= 2");
  FockOperator block = grade_project(povm.at(label), grade);
  std::vector<int> members;
  for (int i : dict.ideal_indices)
    if (dict.bob_ops[i].grade == grade) members.push_back(i);
  if (members.empty())
    throw std::invalid_argument("decompose_projection: no ideal operators at this grade");
  std::vector<const Matrix*> basis;
  for (int m : members) basis.push_back(&dict.bob_ops[m].mat);
  auto [coeff, residual] = span_decompose(block.mat, basis);
  if (residual > 1e-12)
    throw std::runtime_error("decompose_projection: block escapes the ideal span (residual " +
                             std::to_string(residual) + ")");
  ProjectionDecomposition out{label, grade, {}, residual};
  for (size_t a = 0; a < members.size(); ++a)
    if (std::abs(coeff(a)) > 1e-12)
      out.coefficients[dict.bob_ops[members[a]].name] = coeff(a).real();
  return out;
}

}  // namespace evmverify

#endif  // EVMVERIFY_IDEALOPS_HPP
