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

#ifndef EVMVERIFY_EVM_HPP
#define EVMVERIFY_EVM_HPP

#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "evmverify/idealops.hpp"

namespace evmverify {

using DictPtr = std::shared_ptr<const OperatorDictionary>;

inline const std::vector<Outcome>& alice_outcomes() {
  static const std::vector<Outcome> a = {Outcome::H, Outcome::V, Outcome::D, Outcome::A};
  return a;
}

/// Joint outcome probabilities p(x, y): Alice's prepared polarization against
/// Bob's click pattern, both basis choices folded in.
struct ObservedStatistics {
  Scheme scheme = Scheme::active;
  std::map<std::pair<Outcome, Outcome>, double> table;

  double p(Outcome x, Outcome y) const {
    auto it = table.find({x, y});
    return it == table.end() ? 0.0 : it->second;
  }
  void set(Outcome x, Outcome y, double v) { table[{x, y}] = v; }

  double double_click_probability() const {
    double d = 0.0;
    for (Outcome x : alice_outcomes()) d += p(x, Outcome::HV) + p(x, Outcome::DA);
    return d;
  }
  /// Error probability after the uniform double-click reassignment.
  double effective_error_probability() const {
    double e = 0.0;
    e += p(Outcome::H, Outcome::V) + 0.5 * p(Outcome::H, Outcome::HV);
    e += p(Outcome::V, Outcome::H) + 0.5 * p(Outcome::V, Outcome::HV);
    e += p(Outcome::D, Outcome::A) + 0.5 * p(Outcome::D, Outcome::DA);
    e += p(Outcome::A, Outcome::D) + 0.5 * p(Outcome::A, Outcome::DA);
    return e;
  }
  double cross_click_probability() const {
    double c = 0.0;
    for (Outcome x : alice_outcomes()) c += p(x, Outcome::CC);
    return c;
  }
};

inline void validate_statistics(const ObservedStatistics& stats, double tol = 1e-10) {
  for (const auto& [key, v] : stats.table)
    if (v < -tol || v > 1.0 + tol)
      throw std::invalid_argument("statistics: probability outside [0,1]");
  for (Outcome x : alice_outcomes()) {
    if (stats.scheme == Scheme::active) {
      double hv = stats.p(x, Outcome::NoneHV) + stats.p(x, Outcome::H) +
                  stats.p(x, Outcome::V) + stats.p(x, Outcome::HV);
      double da = stats.p(x, Outcome::NoneDA) + stats.p(x, Outcome::D) +
                  stats.p(x, Outcome::A) + stats.p(x, Outcome::DA);
      if (std::abs(hv - 0.125) > tol || std::abs(da - 0.125) > tol)
        throw std::invalid_argument("statistics: basis-conditional normalization broken");
    } else {
      double total = 0.0;
      for (Outcome y : outcome_alphabet(Scheme::passive)) total += stats.p(x, y);
      if (std::abs(total - 0.25) > tol)
        throw std::invalid_argument("statistics: Alice marginal is not 1/4");
    }
  }
}

/// Minimization constants feeding the photon-number tail inequalities.
struct TailBounds {
  std::optional<double> d3_min;  // active
  std::optional<double> e3_min;  // active
  std::optional<double> c2_min;  // passive
};

enum class Rel { EQ, REQ, GE };  // complex equality, real-part equality, >=

struct EvmTerm {
  int row, col;  // row = i*B + j, col = k*B + l
  Complex coeff;
};

struct EvmConstraint {
  std::vector<EvmTerm> terms;
  Rel rel = Rel::EQ;
  double rhs = 0.0;
  std::string note;
};

struct ConstraintGroup {
  std::string name;
  std::vector<EvmConstraint> constraints;
};

struct CompileOptions {
  bool use_tails = true;
  bool count_contract = true;  // enforce the ledger sizes for active one-mode
};

struct EVMProblem {
  DictPtr dict;
  int bob = 0;
  int dim = 0;  // 2 * bob
  std::vector<ConstraintGroup> groups;
  ObservedStatistics observed;
  TailBounds tails;

  int entry_row(int i, int j) const { return i * bob + j; }

  std::vector<int> group_sizes() const {
    std::vector<int> out;
    for (const auto& g : groups) out.push_back(int(g.constraints.size()));
    return out;
  }
  const ConstraintGroup& group(const std::string& name) const {
    for (const auto& g : groups)
      if (g.name == name) return g;
    throw std::invalid_argument("no constraint group '" + name + "'");
  }
};

namespace detail {

/// Alice operator products |x><x| and the D/A combinations expanded over
/// A_i^dag A_k = |i><k| with |1> = |H>, |2> = |V>.
/// Returns list of ((i,k), coefficient).
inline std::vector<std::pair<std::pair<int, int>, double>> alice_projector(Outcome x) {
  switch (x) {
    case Outcome::H: return {{{0, 0}, 1.0}};
    case Outcome::V: return {{{1, 1}, 1.0}};
    case Outcome::D:
      return {{{0, 0}, 0.5}, {{1, 1}, 0.5}, {{0, 1}, 0.5}, {{1, 0}, 0.5}};
    case Outcome::A:
      return {{{0, 0}, 0.5}, {{1, 1}, 0.5}, {{0, 1}, -0.5}, {{1, 0}, -0.5}};
    default:
      throw std::invalid_argument("alice_projector: not an Alice outcome");
  }
}

}  // namespace detail

/// Compiles the EVM feasibility constraints from the dictionary's relation
/// metadata, the observed statistics, and the photon-tail bounds.
inline EVMProblem compile(DictPtr dict, const ObservedStatistics& observed,
                          const TailBounds& tails, const CompileOptions& options = {}) {
  if (observed.scheme != dict->config.scheme)
    throw std::invalid_argument("compile: statistics/dictionary scheme mismatch");
  validate_statistics(observed);

  EVMProblem prob;
  prob.dict = dict;
  prob.bob = dict->bob_count();
  prob.dim = 2 * prob.bob;
  prob.observed = observed;
  prob.tails = tails;
  const auto& ops = dict->bob_ops;
  const auto& rel = dict->relations;
  const bool active = dict->config.scheme == Scheme::active;
  // <|x><x| (x) M_y> = obs_factor * p(x, y).
  const double obs_factor = active ? 4.0 : 2.0;
  const int B = prob.bob;

  auto entry = [&](int i, int j, int k, int l) {
    return std::pair<int, int>{i * B + j, k * B + l};
  };
  auto add = [&](ConstraintGroup& g, EvmConstraint c) { g.constraints.push_back(std::move(c)); };
  auto term = [&](int i, int j, int k, int l, Complex coeff) {
    auto [r, c] = entry(i, j, k, l);
    return EvmTerm{r, c, coeff};
  };

  const std::vector<Outcome> alice_basis = {Outcome::H, Outcome::V};

  // --- Observed values: Alice reduced state and diagonal-Alice statistics.
  ConstraintGroup g1{"observations", {}};
  for (int i = 0; i < 2; ++i)
    for (int k = 0; k < 2; ++k)
      add(g1, {{term(i, 0, k, 0, 1.0)}, Rel::EQ, i == k ? 0.5 : 0.0, "alice state"});
  for (int i = 0; i < 2; ++i)
    for (int m : dict->measurement_indices)
      add(g1, {{term(i, 0, i, m, 1.0)},
               Rel::EQ,
               obs_factor * observed.p(alice_basis[i], ops[m].outcome),
               "p(" + to_string(alice_basis[i]) + "," + to_string(ops[m].outcome) + ")"});
  prob.groups.push_back(std::move(g1));

  // --- Observed values entering through A_1^dag A_2 and state realness.
  ConstraintGroup g2{"cross-observations", {}};
  for (int m : dict->measurement_indices) {
    double v = 0.5 * obs_factor *
               (observed.p(Outcome::D, ops[m].outcome) - observed.p(Outcome::A, ops[m].outcome));
    add(g2, {{term(0, 0, 1, m, 1.0)}, Rel::EQ, v, "A1*A2 x " + ops[m].name});
    add(g2, {{term(1, 0, 0, m, 1.0)}, Rel::EQ, v, "A2*A1 x " + ops[m].name});
  }
  prob.groups.push_back(std::move(g2));

  // --- Commuting swaps and orthogonality zeros.
  ConstraintGroup g3{"operator-relations", {}};
  for (const auto& [j, l] : rel.commuting)
    for (int i = 0; i < 2; ++i)
      for (int k = 0; k < 2; ++k)
        add(g3, {{term(i, j, k, l, 1.0), term(i, l, k, j, -1.0)},
                 Rel::EQ,
                 0.0,
                 "[" + ops[j].name + "," + ops[l].name + "]=0"});
  for (const auto& [j, l] : rel.orthogonal)
    for (int i = 0; i < 2; ++i)
      for (int k = 0; k < 2; ++k)
        add(g3, {{term(i, j, k, l, 1.0)},
                 Rel::EQ,
                 0.0,
                 ops[j].name + " _|_ " + ops[l].name});
  prob.groups.push_back(std::move(g3));

  // --- Same-subspace ideal-operator products rewritten over the identity row.
  ConstraintGroup g4{"commutation-identities", {}};
  for (const auto& [pair, decomposition] : rel.products)
    for (int i = 0; i < 2; ++i)
      for (int k = 0; k < 2; ++k) {
        EvmConstraint c;
        c.terms.push_back(term(i, pair.first, k, pair.second, 1.0));
        for (const auto& [m, coeff] : decomposition)
          c.terms.push_back(term(i, 0, k, m, -coeff));
        c.rel = Rel::EQ;
        c.note = ops[pair.first].name + "*" + ops[pair.second].name;
        add(g4, std::move(c));
      }
  prob.groups.push_back(std::move(g4));

  // --- Realness typing of the Alice-off-diagonal identity-row entries.
  ConstraintGroup g5{"realness", {}};
  for (int m = 1; m < B; ++m) {
    // Real operators give real entries for real-valued states; the two
    // imaginary-flagged operators give purely imaginary entries.
    Complex pick = ops[m].real ? Complex(0, -1) : Complex(1, 0);
    std::string what = ops[m].real ? "Im" : "Re";
    add(g5, {{term(0, 0, 1, m, pick)}, Rel::REQ, 0.0, what + " A1*A2 x " + ops[m].name});
    add(g5, {{term(1, 0, 0, m, pick)}, Rel::REQ, 0.0, what + " A2*A1 x " + ops[m].name});
  }
  prob.groups.push_back(std::move(g5));

  // --- Projection decompositions: identity/measurement against ideal ops.
  ConstraintGroup g6{"projection-decompositions", {}};
  for (int x = 0; x < B; ++x) {
    if (ops[x].kind == OpKind::Ideal) continue;
    for (int y : dict->ideal_indices) {
      int pid = dict->pattern_of[y];
      auto proj_it = rel.projections.find({x, pid});
      if (proj_it == rel.projections.end()) continue;
      const auto& proj = proj_it->second;
      for (int i = 0; i < 2; ++i)
        for (int k = 0; k < 2; ++k) {
          EvmConstraint c;
          c.terms.push_back(term(i, x, k, y, 1.0));
          for (const auto& [z, coeff] : proj) c.terms.push_back(term(i, z, k, y, -coeff));
          c.rel = Rel::EQ;
          c.note = ops[x].name + " -> " + ops[y].name + " block";
          add(g6, std::move(c));
        }
    }
  }
  for (size_t pid = 0; pid < dict->patterns.size(); ++pid) {
    int p = dict->pattern_identity_of[pid];
    for (int i = 0; i < 2; ++i)
      for (int k = 0; k < 2; ++k)
        add(g6, {{term(i, p, k, p, 1.0), term(i, 0, k, p, -1.0)},
                 Rel::EQ,
                 0.0,
                 ops[p].name + " idempotent"});
  }
  prob.groups.push_back(std::move(g6));

  // --- Idempotent-projector absorption: the subspace identity acting on a
  // same-subspace ideal operator leaves it unchanged. Documented supplement
  // to the named ledger groups.
  ConstraintGroup g6b{"absorption", {}};
  for (int y : dict->ideal_indices) {
    if (ops[y].pattern_identity) continue;
    int p = dict->pattern_identity_of[dict->pattern_of[y]];
    for (int i = 0; i < 2; ++i)
      for (int k = 0; k < 2; ++k)
        add(g6b, {{term(i, p, k, y, 1.0), term(i, 0, k, y, -1.0)},
                  Rel::EQ,
                  0.0,
                  ops[p].name + "*" + ops[y].name + " absorbs"});
  }
  prob.groups.push_back(std::move(g6b));

  // --- Operator-ordering inequalities.
  ConstraintGroup g7{"operator-inequalities", {}};
  auto basis_group = [&](Outcome o) {
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
  for (int j : dict->measurement_indices)
    for (int l : dict->measurement_indices) {
      bool same_basis = active ? basis_group(ops[j].outcome) == basis_group(ops[l].outcome)
                               : j == l;
      if (!same_basis) continue;
      for (int i = 0; i < 2; ++i) {
        add(g7, {{term(i, j, i, l, 1.0)},
                 Rel::GE,
                 0.0,
                 ops[j].name + "*" + ops[l].name + " >= 0"});
        add(g7, {{term(i, 0, i, j, 1.0), term(i, j, i, l, -1.0)},
                 Rel::GE,
                 0.0,
                 ops[j].name + " >= " + ops[j].name + "*" + ops[l].name});
      }
    }
  // Measurement elements dominate their few-photon projections. Patterns
  // whose block escapes the ideal span are dropped; that only weakens the
  // bound since each dropped block is itself PSD.
  for (int x : dict->measurement_indices)
    for (int i = 0; i < 2; ++i) {
      EvmConstraint c;
      c.terms.push_back(term(i, 0, i, x, 1.0));
      for (size_t pid = 0; pid < dict->patterns.size(); ++pid) {
        auto it = rel.projections.find({x, int(pid)});
        if (it == rel.projections.end()) continue;
        for (const auto& [z, coeff] : it->second) c.terms.push_back(term(i, 0, i, z, -coeff));
      }
      c.rel = Rel::GE;
      c.note = ops[x].name + " >= its low-photon part";
      add(g7, std::move(c));
    }
  // Non-identity PSD ideal operators sit between zero and their subspace
  // identity.
  for (int y : dict->ideal_indices) {
    if (ops[y].pattern_identity || !ops[y].real) continue;
    int p = dict->pattern_identity_of[dict->pattern_of[y]];
    for (int i = 0; i < 2; ++i) {
      add(g7, {{term(i, 0, i, y, 1.0)}, Rel::GE, 0.0, ops[y].name + " >= 0"});
      add(g7, {{term(i, 0, i, p, 1.0), term(i, 0, i, y, -1.0)},
               Rel::GE,
               0.0,
               ops[y].name + " <= " + ops[p].name});
    }
  }
  prob.groups.push_back(std::move(g7));

  // --- Photon-number occupation bounds and observation tails.
  ConstraintGroup g8{"photon-tails", {}};
  if (options.use_tails) {
    int max_grade = 0;
    for (const auto& p : dict->patterns)
      for (int v : p) max_grade = std::max(max_grade, v);
    std::vector<int> grades;
    {
      std::set<int> gset;
      for (const auto& p : dict->patterns) {
        int t = 0;
        for (int v : p) t += v;
        gset.insert(t);
      }
      grades.assign(gset.begin(), gset.end());
    }
    auto grade_identity_terms = [&](int i, int g, double scale) {
      std::vector<EvmTerm> out;
      for (size_t pid = 0; pid < dict->patterns.size(); ++pid) {
        int t = 0;
        for (int v : dict->patterns[pid]) t += v;
        if (t == g) out.push_back(term(i, 0, i, dict->pattern_identity_of[pid], scale));
      }
      return out;
    };
    for (int i = 0; i < 2; ++i)
      for (int g : grades)
        add(g8, {grade_identity_terms(i, g, 1.0), Rel::GE, 0.0,
                 "p" + std::to_string(g) + " >= 0"});
    for (int i = 0; i < 2; ++i)
      for (int g : grades) {
        EvmConstraint c;
        c.terms.push_back(term(i, 0, i, 0, 1.0));
        for (EvmTerm t : grade_identity_terms(i, g, -1.0)) c.terms.push_back(t);
        c.rel = Rel::GE;
        c.note = "p" + std::to_string(g) + " <= marginal";
        add(g8, std::move(c));
      }
    for (int i = 0; i < 2; ++i) {
      EvmConstraint c;
      c.terms.push_back(term(i, 0, i, 0, 1.0));
      for (int g : grades)
        for (EvmTerm t : grade_identity_terms(i, g, -1.0)) c.terms.push_back(t);
      c.rel = Rel::GE;
      c.note = "sum of pg <= marginal";
      add(g8, std::move(c));
    }

    if (active && tails.d3_min && max_grade >= 2) {
      // d_obs >= <F_DC restricted to two photons> + (1 - p0 - p1 - p2) d3_min
      double d3 = *tails.d3_min;
      EvmConstraint c;
      c.rel = Rel::GE;
      c.rhs = d3 - observed.double_click_probability();
      // d3_min * (p0 + p1 + p2)
      for (int i = 0; i < 2; ++i)
        for (int g : grades)
          for (EvmTerm t : grade_identity_terms(i, g, d3)) c.terms.push_back(t);
      // minus the two-photon double-click form: 1/2 <A_i A_i x (M_HV + M_DA)^(2)>
      for (int i = 0; i < 2; ++i)
        for (Outcome label : {Outcome::HV, Outcome::DA}) {
          int x = -1;
          for (int m : dict->measurement_indices)
            if (ops[m].outcome == label) x = m;
          for (size_t pid = 0; pid < dict->patterns.size(); ++pid) {
            int t = 0;
            for (int v : dict->patterns[pid]) t += v;
            if (t != 2) continue;
            auto it = rel.projections.find({x, int(pid)});
            if (it == rel.projections.end()) throw std::runtime_error(
                "tail: two-photon block of " + ops[x].name + " escapes the ideal span");
            for (const auto& [z, coeff] : it->second)
              c.terms.push_back(term(i, 0, i, z, -0.5 * coeff));
          }
        }
      c.note = "double-click tail";
      add(g8, std::move(c));
    }
    if (active && tails.e3_min && max_grade >= 2) {
      // e_obs >= <F_EE^(1)> + <F_EE^(2)> + (1 - p0 - p1 - p2) e3_min
      double e3 = *tails.e3_min;
      EvmConstraint c;
      c.rel = Rel::GE;
      c.rhs = e3 - observed.effective_error_probability();
      for (int i = 0; i < 2; ++i)
        for (int g : grades)
          for (EvmTerm t : grade_identity_terms(i, g, e3)) c.terms.push_back(t);
      const std::vector<std::pair<Outcome, std::pair<Outcome, Outcome>>> error_map = {
          {Outcome::H, {Outcome::V, Outcome::HV}},
          {Outcome::V, {Outcome::H, Outcome::HV}},
          {Outcome::D, {Outcome::A, Outcome::DA}},
          {Outcome::A, {Outcome::D, Outcome::DA}}};
      for (const auto& [ax, bobpair] : error_map)
        for (const auto& [ik, alpha] : detail::alice_projector(ax))
          for (int g : {1, 2}) {
            for (auto [label, w] : {std::pair<Outcome, double>{bobpair.first, 1.0},
                                    std::pair<Outcome, double>{bobpair.second, 0.5}}) {
              int x = -1;
              for (int m : dict->measurement_indices)
                if (ops[m].outcome == label) x = m;
              for (size_t pid = 0; pid < dict->patterns.size(); ++pid) {
                int t = 0;
                for (int v : dict->patterns[pid]) t += v;
                if (t != g) continue;
                auto it = rel.projections.find({x, int(pid)});
                if (it == rel.projections.end()) throw std::runtime_error(
                    "tail: block of " + ops[x].name + " escapes the ideal span");
                for (const auto& [z, coeff] : it->second)
                  c.terms.push_back(
                      term(ik.first, 0, ik.second, z, -0.25 * alpha * w * coeff));
              }
            }
          }
      c.note = "effective-error tail";
      add(g8, std::move(c));
    }
    if (!active && tails.c2_min) {
      // c_obs >= (1 - p0 - p1) c2_min
      double c2 = *tails.c2_min;
      EvmConstraint c;
      c.rel = Rel::GE;
      c.rhs = c2 - observed.cross_click_probability();
      for (int i = 0; i < 2; ++i)
        for (int g : grades)
          if (g <= 1)
            for (EvmTerm t : grade_identity_terms(i, g, c2)) c.terms.push_back(t);
      c.note = "cross-click tail";
      add(g8, std::move(c));
    }
  }
  prob.groups.push_back(std::move(g8));

  if (options.count_contract && active && dict->config.spatial_modes == 1 &&
      dict->space->cutoff() >= 2 && options.use_tails && tails.d3_min && tails.e3_min) {
    const std::vector<std::pair<std::string, int>> expected = {
        {"observations", 16},     {"cross-observations", 12},
        {"operator-relations", 188}, {"commutation-identities", 72},
        {"realness", 34},         {"projection-decompositions", 320},
        {"operator-inequalities", 108}, {"photon-tails", 16}};
    for (const auto& [name, count] : expected) {
      int got = int(prob.group(name).constraints.size());
      if (got != count)
        throw std::runtime_error("constraint-ledger contract broken: group '" + name +
                                 "' has " + std::to_string(got) + " constraints, expected " +
                                 std::to_string(count));
    }
  }
  return prob;
}

/// Partial transpose on Alice's operator indices only.
inline Matrix partial_transpose(const Matrix& chi, int bob) {
  Matrix out(chi.rows(), chi.cols());
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < bob; ++j)
      for (int k = 0; k < 2; ++k)
        for (int l = 0; l < bob; ++l)
          out(i * bob + j, k * bob + l) = chi(k * bob + j, i * bob + l);
  return out;
}

/// Direct-trace EVM of a concrete joint state: the testing oracle for the
/// compiler. rho acts on (Alice qubit) x (dictionary space).
inline Matrix evm_of_state(const Matrix& rho, const OperatorDictionary& dict) {
  const int B = dict.bob_count();
  const int s = dict.space->dim();
  if (rho.rows() != 2 * s)
    throw std::invalid_argument("evm_of_state: state dimension mismatch");
  Matrix chi(2 * B, 2 * B);
  // rho sub-blocks: rho_{(i,a),(k,b)}; contraction over Bob for each (i,k).
  for (int i = 0; i < 2; ++i)
    for (int k = 0; k < 2; ++k) {
      // T_{ab} = rho_{(k,a),(i,b)} : Tr[rho (|i><k| x P)] = sum_ab T_ab P_ba.
      Matrix t = rho.block(k * s, i * s, s, s);
      for (int j = 0; j < B; ++j)
        for (int l = 0; l < B; ++l) {
          Matrix p = dict.bob_ops[j].mat * dict.bob_ops[l].mat;  // B_j^dag B_l
          chi(i * B + j, k * B + l) = t.cwiseProduct(p.transpose()).sum();
        }
    }
  return chi;
}

/// Evaluates one constraint on a concrete EVM.
inline Complex evaluate_constraint(const EvmConstraint& c, const Matrix& chi) {
  Complex v = 0.0;
  for (const EvmTerm& t : c.terms) v += t.coeff * chi(t.row, t.col);
  return v;
}

/// Exact outcome statistics of a concrete joint state under a measurement
/// set: p(x, y) = Tr[rho (|x><x|/2 (x) f M_y)] with f = 1/2 for the active
/// scheme's basis choice and 1 for the passive splitter.
inline ObservedStatistics statistics_of_state(const Matrix& rho, const PovmSet& povm) {
  const int s = povm.space->dim();
  if (rho.rows() != 2 * s)
    throw std::invalid_argument("statistics_of_state: dimension mismatch");
  ObservedStatistics stats;
  stats.scheme = povm.config.scheme;
  double f = povm.config.scheme == Scheme::active ? 0.5 : 1.0;
  for (Outcome x : alice_outcomes()) {
    Matrix ax = Matrix::Zero(2, 2);
    for (const auto& [ik, alpha] : detail::alice_projector(x))
      ax(ik.first, ik.second) += alpha;
    for (Outcome y : outcome_alphabet(povm.config.scheme)) {
      Matrix joint = kron(0.5 * ax, f * povm.at(y).mat);
      stats.set(x, y, (rho * joint).trace().real());
    }
  }
  return stats;
}

/// Plain-text problem listing with provenance tags, for golden-file diffs.
inline std::string dump_problem(const EVMProblem& prob) {
  std::ostringstream os;
  os.precision(12);
  os << "evm dim " << prob.dim << "\n";
  for (const auto& g : prob.groups) {
    os << "group " << g.name << " " << g.constraints.size() << "\n";
    for (const auto& c : g.constraints) {
      os << (c.rel == Rel::EQ ? "eq " : c.rel == Rel::REQ ? "req" : "ge ") << " rhs "
         << c.rhs << " :";
      for (const auto& t : c.terms) {
        os << " (" << t.row << "," << t.col << ")";
        if (t.coeff.imag() == 0.0)
          os << t.coeff.real();
        else
          os << t.coeff.real() << (t.coeff.imag() >= 0 ? "+" : "") << t.coeff.imag() << "i";
      }
      os << "  # " << c.note << "\n";
    }
  }
  return os.str();
}

}  // namespace evmverify

#endif  // EVMVERIFY_EVM_HPP
