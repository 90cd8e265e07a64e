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

#ifndef EVMVERIFY_VERIFIER_HPP
#define EVMVERIFY_VERIFIER_HPP

#include <chrono>
#include <functional>
#include <optional>

#include "evmverify/evm.hpp"
#include "evmverify/sdp.hpp"

namespace evmverify {

enum class Verdict { ENTANGLED, NOT_VERIFIED, INCONCLUSIVE };

inline std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::ENTANGLED: return "ENTANGLED";
    case Verdict::NOT_VERIFIED: return "NOT_VERIFIED";
    case Verdict::INCONCLUSIVE: return "INCONCLUSIVE";
  }
  return "?";
}

struct FeasibilityVerdict {
  Verdict verdict = Verdict::INCONCLUSIVE;
  double margin = 0.0;              // robustified feasibility margin t*
  double certified_upper = 0.0;     // independently checked bound on t*
  double certificate_residual = 0.0;
  std::optional<Matrix> feasible_chi;
  std::string diagnostics;
  double seconds = 0.0;
  SdpStatus solver_status = SdpStatus::Failed;
};

struct VerifySettings {
  double entangled_threshold = -1e-7;  // certified t* below this proves entanglement
  double cone_tol = 1e-9;              // witness eigenvalue slack for NOT_VERIFIED
  double constraint_tol = 1e-7;
  SdpSettings sdp;
  std::string backend;  // empty = default
};

namespace detail {

/// Real-dof indexing of a Hermitian matrix: diagonal entries first, then
/// (Re, Im) pairs over the strict upper triangle in column-major order.
struct HermitianDofs {
  int d = 0;
  int total = 0;
  Eigen::MatrixXi off_base;       // first dof of entry (r, c), r < c
  std::vector<int> cell_row, cell_col;
  std::vector<bool> is_imag;

  explicit HermitianDofs(int dim) : d(dim), off_base(dim, dim) {
    off_base.setConstant(-1);
    int next = dim;
    cell_row.resize(dim);
    cell_col.resize(dim);
    is_imag.resize(dim, false);
    for (int r = 0; r < dim; ++r) {
      cell_row[r] = r;
      cell_col[r] = r;
    }
    for (int c = 0; c < dim; ++c)
      for (int r = 0; r < c; ++r) {
        off_base(r, c) = next;
        cell_row.push_back(r);
        cell_col.push_back(c);
        is_imag.push_back(false);
        cell_row.push_back(r);
        cell_col.push_back(c);
        is_imag.push_back(true);
        next += 2;
      }
    total = next;
  }

  Matrix to_matrix(const Eigen::VectorXd& u) const {
    Matrix m(d, d);
    for (int c = 0; c < d; ++c) {
      m(c, c) = u(c);
      for (int r = 0; r < c; ++r) {
        int b = off_base(r, c);
        m(r, c) = Complex(u(b), u(b + 1));
        m(c, r) = Complex(u(b), -u(b + 1));
      }
    }
    return m;
  }
};

struct RealRow {
  std::vector<std::pair<int, double>> terms;
  double rhs = 0.0;
};

/// Splits the complex constraint list into real rows over Hermitian dofs.
struct RealizedSystem {
  HermitianDofs dofs;
  std::vector<RealRow> equalities;
  std::vector<RealRow> inequalities;  // row . u >= rhs

  explicit RealizedSystem(const EVMProblem& prob) : dofs(prob.dim) {
    for (const auto& g : prob.groups)
      for (const auto& c : g.constraints) append(c);
  }

  void append(const EvmConstraint& c) {
    std::map<int, double> re_row, im_row;
    auto accumulate = [&](int r, int col, Complex coeff) {
      if (r == col) {
        re_row[r] += coeff.real();
        im_row[r] += coeff.imag();
        return;
      }
      bool upper = r < col;
      int rr = upper ? r : col, cc = upper ? col : r;
      int b = dofs.off_base(rr, cc);
      double sign = upper ? 1.0 : -1.0;  // chi_{r,c} = x + i*sign*y
      re_row[b] += coeff.real();
      re_row[b + 1] += -coeff.imag() * sign;
      im_row[b] += coeff.imag();
      im_row[b + 1] += coeff.real() * sign;
    };
    for (const EvmTerm& t : c.terms) accumulate(t.row, t.col, t.coeff);
    auto flush = [&](std::map<int, double>& row, double rhs, bool is_eq) {
      RealRow out;
      for (const auto& [idx, v] : row)
        if (std::abs(v) > 1e-14) out.terms.emplace_back(idx, v);
      out.rhs = rhs;
      if (out.terms.empty() && std::abs(rhs) < 1e-12) return;
      (is_eq ? equalities : inequalities).push_back(std::move(out));
    };
    switch (c.rel) {
      case Rel::EQ:
        flush(re_row, c.rhs, true);
        flush(im_row, 0.0, true);
        break;
      case Rel::REQ:
        flush(re_row, c.rhs, true);
        break;
      case Rel::GE:
        flush(re_row, c.rhs, false);
        break;
    }
  }
};

/// Sparsity-preserving Gaussian substitution over the equality rows.
/// Produces a particular solution and a sparse affine parametrization
/// u = u0 + K x of the solution set (columns of K stay sparse because the
/// constraint rows are pins, aliases, and short identities).
struct SparsePresolve {
  int n = 0;
  bool consistent = true;
  std::string issue;
  Eigen::VectorXd u0;
  std::vector<int> free_dofs;                       // dof index per free variable
  std::vector<std::map<int, double>> expansions;    // per dof: free-var -> coeff

  SparsePresolve(int total, const std::vector<RealRow>& equalities) : n(total) {
    // solved[d]: affine expression of dof d over not-yet-solved dofs.
    struct Expr {
      std::map<int, double> terms;
      double constant = 0.0;
    };
    std::vector<std::optional<Expr>> solved(n);
    std::vector<int> order;

    std::vector<int> row_idx(equalities.size());
    for (size_t i = 0; i < equalities.size(); ++i) row_idx[i] = int(i);
    std::stable_sort(row_idx.begin(), row_idx.end(), [&](int a, int b) {
      return equalities[a].terms.size() < equalities[b].terms.size();
    });

    for (int r : row_idx) {
      // Reduce the row against already-solved dofs (with full expansion).
      std::map<int, double> row;
      double rhs = equalities[r].rhs;
      std::vector<std::pair<int, double>> pending(equalities[r].terms.begin(),
                                                  equalities[r].terms.end());
      while (!pending.empty()) {
        auto [d, v] = pending.back();
        pending.pop_back();
        if (std::abs(v) < 1e-14) continue;
        if (solved[d]) {
          rhs -= v * solved[d]->constant;
          for (const auto& [dd, vv] : solved[d]->terms) pending.emplace_back(dd, v * vv);
        } else {
          row[d] += v;
        }
      }
      double scale = 0.0;
      int pivot = -1;
      for (const auto& [d, v] : row)
        if (std::abs(v) > scale) {
          scale = std::abs(v);
          pivot = d;
        }
      if (pivot < 0 || scale < 1e-11) {
        if (std::abs(rhs) > 1e-8) {
          consistent = false;
          issue = "equality row reduces to 0 = " + std::to_string(rhs);
        }
        continue;
      }
      Expr e;
      double pv = row[pivot];
      e.constant = rhs / pv;
      for (const auto& [d, v] : row)
        if (d != pivot && std::abs(v) > 1e-14) e.terms[d] = -v / pv;
      solved[pivot] = std::move(e);
      order.push_back(pivot);
    }

    // Fully expand solved expressions over free dofs, last solved first.
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
      Expr& e = *solved[*it];
      std::map<int, double> flat;
      for (const auto& [d, v] : e.terms) {
        if (solved[d] && d != *it) {
          e.constant += v * solved[d]->constant;
          for (const auto& [dd, vv] : solved[d]->terms)
            if (std::abs(v * vv) > 1e-15) flat[dd] += v * vv;
        } else {
          flat[d] += v;
        }
      }
      e.terms = std::move(flat);
    }

    std::vector<int> free_index(n, -1);
    for (int d = 0; d < n; ++d)
      if (!solved[d]) {
        free_index[d] = int(free_dofs.size());
        free_dofs.push_back(d);
      }
    u0 = Eigen::VectorXd::Zero(n);
    expansions.assign(n, {});
    for (int d = 0; d < n; ++d) {
      if (!solved[d]) {
        expansions[d][free_index[d]] = 1.0;
        continue;
      }
      u0(d) = solved[d]->constant;
      for (const auto& [dd, vv] : solved[d]->terms) {
        if (free_index[dd] < 0) continue;  // numerically dropped
        expansions[d][free_index[dd]] = vv;
      }
    }
  }

  Eigen::VectorXd assemble(const Eigen::VectorXd& x) const {
    Eigen::VectorXd u = u0;
    for (int d = 0; d < n; ++d)
      for (const auto& [f, v] : expansions[d]) u(d) += v * x(f);
    return u;
  }
};

}  // namespace detail

/// Realized and presolved EVM feasibility problem.
class CompiledEvm {
 public:
  explicit CompiledEvm(const EVMProblem& prob)
      : prob_(prob), sys_(prob), presolve_(sys_.dofs.total, sys_.equalities) {}

  const EVMProblem& problem() const { return prob_; }
  const detail::RealizedSystem& system() const { return sys_; }
  const detail::SparsePresolve& presolve() const { return presolve_; }
  int free_dofs() const { return int(presolve_.free_dofs.size()); }

 private:
  EVMProblem prob_;
  detail::RealizedSystem sys_;
  detail::SparsePresolve presolve_;
};

/// Solves the robustified feasibility problem
///   max t  s.t.  chi(x) >= tI,  chi(x)^Gamma >= tI,  slacks(x) >= t,
/// over the affine family satisfying all equality constraints, and turns
/// the outcome into a verdict. ENTANGLED requires an independently
/// validated infeasibility certificate; NOT_VERIFIED requires a concrete
/// witness matrix that survives re-validation.
inline FeasibilityVerdict verify(const CompiledEvm& compiled,
                                 const VerifySettings& settings = {}) {
  auto t0 = std::chrono::steady_clock::now();
  FeasibilityVerdict out;
  const EVMProblem& prob = compiled.problem();
  const auto& sys = compiled.system();
  const auto& pre = compiled.presolve();
  const int d = prob.dim;
  const int bob = prob.bob;

  if (!pre.consistent) {
    out.verdict = Verdict::INCONCLUSIVE;
    out.diagnostics = "equalities inconsistent: " + pre.issue;
    return out;
  }
  const int k = int(pre.free_dofs.size());
  const int nvars = k + 1;  // x..., t

  SdpProblem sdp;
  sdp.objective = Eigen::VectorXd::Zero(nvars);
  sdp.objective(k) = 1.0;

  // chi and its partial transpose as affine Hermitian blocks over (x, t).
  auto gamma_cell = [&](int r, int c) {
    int i = r / bob, j = r % bob, kk = c / bob, l = c % bob;
    return std::pair<int, int>{kk * bob + j, i * bob + l};
  };
  auto push_cell = [&](std::vector<SdpCoeff>& list, int r, int c, Complex v) {
    if (r >= c)
      list.push_back({r, c, v});
    else
      list.push_back({c, r, std::conj(v)});
  };
  auto hermitian_block = [&](bool ppt) {
    SdpBlockDef blk;
    blk.dim = d;
    Matrix base = sys.dofs.to_matrix(pre.u0);
    if (ppt) base = partial_transpose(base, bob);
    blk.f0 = base;
    blk.coeffs.resize(nvars);
    for (int dof = 0; dof < sys.dofs.total; ++dof) {
      if (pre.expansions[dof].empty()) continue;
      int r = sys.dofs.cell_row[dof], c = sys.dofs.cell_col[dof];
      Complex unit = sys.dofs.is_imag[dof] ? Complex(0, 1) : Complex(1, 0);
      if (ppt) std::tie(r, c) = gamma_cell(r, c);
      for (const auto& [f, v] : pre.expansions[dof])
        push_cell(blk.coeffs[f], r, c, v * unit);
    }
    for (int r = 0; r < d; ++r) blk.coeffs[k].push_back({r, r, -1.0});
    // Merge duplicate cells per variable.
    for (auto& list : blk.coeffs) {
      std::map<std::pair<int, int>, Complex> merged;
      for (const SdpCoeff& co : list) merged[{co.row, co.col}] += co.value;
      list.clear();
      for (const auto& [cell, v] : merged)
        if (std::abs(v) > 1e-15) list.push_back({cell.first, cell.second, v});
    }
    return blk;
  };
  sdp.blocks.push_back(hermitian_block(false));
  sdp.blocks.push_back(hermitian_block(true));

  for (const auto& row : sys.inequalities) {
    SdpBlockDef blk;
    blk.dim = 1;
    double base = -row.rhs;
    std::map<int, double> coeff;
    for (const auto& [dof, v] : row.terms) {
      base += v * pre.u0(dof);
      for (const auto& [f, vv] : pre.expansions[dof]) coeff[f] += v * vv;
    }
    blk.f0 = Matrix::Constant(1, 1, base);
    blk.coeffs.resize(nvars);
    for (const auto& [f, v] : coeff)
      if (std::abs(v) > 1e-14) blk.coeffs[f].push_back({0, 0, v});
    blk.coeffs[k].push_back({0, 0, -1.0});
    sdp.blocks.push_back(std::move(blk));
  }
  {
    SdpBlockDef cap;  // t <= 2 keeps the objective bounded
    cap.dim = 1;
    cap.f0 = Matrix::Constant(1, 1, 2.0);
    cap.coeffs.resize(nvars);
    cap.coeffs[k].push_back({0, 0, -1.0});
    sdp.blocks.push_back(std::move(cap));
  }

  // Strictly feasible start: x = 0, t below every block's minimum.
  Eigen::VectorXd start = Eigen::VectorXd::Zero(nvars);
  double tmin = 1.0;
  for (size_t b = 0; b + 1 < sdp.blocks.size(); ++b) {
    if (sdp.blocks[b].dim == 1) {
      tmin = std::min(tmin, sdp.blocks[b].f0(0, 0).real());
    } else {
      Eigen::SelfAdjointEigenSolver<Matrix> es(sdp.blocks[b].f0, Eigen::EigenvaluesOnly);
      tmin = std::min(tmin, es.eigenvalues().minCoeff());
    }
  }
  start(k) = tmin - 1.0;

  auto backend = make_backend(settings.backend);
  SdpResult res = backend->solve(sdp, start, settings.sdp);
  out.solver_status = res.status;
  out.margin = res.objective_value;

  if (res.status == SdpStatus::Failed) {
    out.verdict = Verdict::INCONCLUSIVE;
    out.diagnostics = "solver failed";
    out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return out;
  }

  // Independent dual certificate: an upper bound on t*. Free variables are
  // matrix entries of a PSD matrix with unit-scale pinned diagonal.
  out.certified_upper = certify_upper_bound(sdp, res.dual, 8.0);
  out.certificate_residual = out.certified_upper - out.margin;

  if (out.certified_upper < settings.entangled_threshold) {
    out.verdict = Verdict::ENTANGLED;
  } else {
    // Try to validate the solver's point as a feasibility witness.
    Eigen::VectorXd u = pre.assemble(res.y.head(k));
    Matrix chi = sys.dofs.to_matrix(u);
    bool ok = true;
    std::string why;
    for (const auto& g : prob.groups)
      for (const auto& c : g.constraints) {
        Complex v = evaluate_constraint(c, chi);
        if (c.rel == Rel::EQ && std::abs(v - Complex(c.rhs, 0)) > settings.constraint_tol)
          ok = false;
        if (c.rel == Rel::REQ && std::abs(v.real() - c.rhs) > settings.constraint_tol)
          ok = false;
        if (c.rel == Rel::GE && v.real() < c.rhs - settings.cone_tol) ok = false;
        if (!ok) {
          why = "constraint '" + c.note + "' violated";
          break;
        }
      }
    if (ok) {
      Eigen::SelfAdjointEigenSolver<Matrix> e1(chi, Eigen::EigenvaluesOnly);
      Eigen::SelfAdjointEigenSolver<Matrix> e2(partial_transpose(chi, bob),
                                               Eigen::EigenvaluesOnly);
      if (e1.eigenvalues().minCoeff() < -settings.cone_tol) {
        ok = false;
        why = "chi not PSD within tolerance";
      } else if (e2.eigenvalues().minCoeff() < -settings.cone_tol) {
        ok = false;
        why = "partial transpose not PSD within tolerance";
      }
    }
    if (ok) {
      out.verdict = Verdict::NOT_VERIFIED;
      out.feasible_chi = chi;
    } else {
      out.verdict = Verdict::INCONCLUSIVE;
      out.diagnostics = "margin " + std::to_string(out.margin) + "; " + why;
    }
  }
  out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return out;
}

inline FeasibilityVerdict verify(const EVMProblem& prob, const VerifySettings& settings = {}) {
  CompiledEvm compiled(prob);
  return verify(compiled, settings);
}

struct EtaScan {
  std::optional<double> eta_min;  // empty when nothing verifies
  bool verified_everywhere = false;
  std::vector<std::pair<double, Verdict>> samples;
};

/// Bisection for the smallest efficiency whose verdict is ENTANGLED,
/// assuming verdict monotonicity in eta (checked on the sample grid).
inline EtaScan find_eta_min(const std::function<Verdict(double)>& verdict_at,
                            double tol = 1e-3) {
  EtaScan scan;
  const std::vector<double> grid = {0.0, 0.25, 0.5, 0.75, 1.0};
  for (double eta : grid) scan.samples.emplace_back(eta, verdict_at(eta));
  for (size_t a = 0; a + 1 < scan.samples.size(); ++a)
    if (scan.samples[a].second == Verdict::ENTANGLED &&
        scan.samples[a + 1].second != Verdict::ENTANGLED)
      throw std::runtime_error(
          "find_eta_min: non-monotone verdicts at eta = " +
          std::to_string(scan.samples[a].first) + " vs " +
          std::to_string(scan.samples[a + 1].first));
  if (scan.samples.back().second != Verdict::ENTANGLED) return scan;  // nothing verifies
  if (scan.samples.front().second == Verdict::ENTANGLED) {
    scan.eta_min = 0.0;
    scan.verified_everywhere = true;
    return scan;
  }
  double lo = 0.0, hi = 1.0;
  for (const auto& [eta, v] : scan.samples)
    if (v == Verdict::ENTANGLED)
      hi = std::min(hi, eta);
    else
      lo = std::max(lo, eta);
  while (hi - lo > tol) {
    double mid = 0.5 * (lo + hi);
    if (verdict_at(mid) == Verdict::ENTANGLED)
      hi = mid;
    else
      lo = mid;
  }
  scan.eta_min = hi;
  return scan;
}

}  // namespace evmverify

#endif  // EVMVERIFY_VERIFIER_HPP
