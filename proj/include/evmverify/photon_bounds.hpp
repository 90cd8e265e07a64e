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

#ifndef EVMVERIFY_PHOTON_BOUNDS_HPP
#define EVMVERIFY_PHOTON_BOUNDS_HPP

#include <functional>
#include <numeric>

#include "evmverify/evm.hpp"
#include "evmverify/povm.hpp"
#include "evmverify/sdp.hpp"

namespace evmverify {

enum class WitnessKind { DoubleClick, EffectiveError, CrossClick };

inline std::string to_string(WitnessKind k) {
  switch (k) {
    case WitnessKind::DoubleClick: return "dc";
    case WitnessKind::EffectiveError: return "ee";
    case WitnessKind::CrossClick: return "cc";
  }
  return "?";
}

struct BoundEntry {
  WitnessKind kind;
  int n = 0;
  double value = 0.0;
  SdpStatus status = SdpStatus::Optimal;
};

struct PhotonBoundTable {
  Scheme scheme;
  std::vector<BoundEntry> rows;

  std::optional<double> value(WitnessKind kind, int n) const {
    for (const auto& r : rows)
      if (r.kind == kind && r.n == n) return r.value;
    return std::nullopt;
  }
};

namespace detail {

/// Product basis over spatial modes at fixed per-mode photon counts.
/// Within each mode the grade basis runs |k,0>, ..., |0,k> as everywhere.
struct CompositionSpace {
  std::vector<int> counts;  // photons per spatial mode
  std::vector<int> dims;    // counts[m] + 1
  int dim = 1;

  explicit CompositionSpace(std::vector<int> c) : counts(std::move(c)) {
    for (int k : counts) {
      dims.push_back(k + 1);
      dim *= k + 1;
    }
  }
  // index <-> per-mode v-counts (mode 0 slowest)
  std::vector<int> coords(int idx) const {
    std::vector<int> out(counts.size());
    for (int m = int(counts.size()) - 1; m >= 0; --m) {
      out[m] = idx % dims[m];
      idx /= dims[m];
    }
    return out;
  }
};

/// Per-composition outcome operators for either scheme, built from the same
/// per-mode grade primitives as the full-space POVMs.
inline std::map<Outcome, Matrix> composition_block_ops(const SchemeConfig& config,
                                                       const DetectorModel& model,
                                                       const CompositionSpace& comp) {
  std::map<Outcome, Matrix> out;
  const int mcount = int(comp.counts.size());
  if (config.scheme == Scheme::active) {
    // Diagonal in the measurement basis; D/A elements rotated per mode.
    auto basis_diag = [&](bool first_detector_clicks, bool second_detector_clicks) {
      Eigen::VectorXd diag(comp.dim);
      for (int idx = 0; idx < comp.dim; ++idx) {
        std::vector<int> v = comp.coords(idx);
        double q1 = 1.0, q2 = 1.0;
        for (int m = 0; m < mcount; ++m) {
          int n_first = comp.counts[m] - v[m];
          q1 *= std::pow(1.0 - model.efficiencies(m, 0), n_first);
          q2 *= std::pow(1.0 - model.efficiencies(m, 1), v[m]);
        }
        double p1 = first_detector_clicks ? 1.0 - q1 : q1;
        double p2 = second_detector_clicks ? 1.0 - q2 : q2;
        diag(idx) = p1 * p2;
      }
      return diag;
    };
    Matrix rot = Matrix::Identity(comp.dim, comp.dim);
    {
      // Per-mode DA->HV rotations, tensored.
      std::vector<Eigen::MatrixXd> mode_rot;
      for (int m = 0; m < mcount; ++m) {
        int g = comp.counts[m];
        Eigen::MatrixXd r(g + 1, g + 1);
        for (int col = 0; col <= g; ++col) {
          std::vector<double> exp = evmverify::detail::da_pair_expansion(g - col, col);
          for (int row = 0; row <= g; ++row) r(row, col) = exp[g - row];
        }
        mode_rot.push_back(r);
      }
      for (int r = 0; r < comp.dim; ++r)
        for (int c = 0; c < comp.dim; ++c) {
          std::vector<int> rc = comp.coords(r), cc = comp.coords(c);
          double v = 1.0;
          for (int m = 0; m < mcount; ++m) v *= mode_rot[m](rc[m], cc[m]);
          rot(r, c) = v;
        }
    }
    out[Outcome::NoneHV] = basis_diag(false, false).asDiagonal();
    out[Outcome::H] = basis_diag(true, false).asDiagonal();
    out[Outcome::V] = basis_diag(false, true).asDiagonal();
    out[Outcome::HV] = basis_diag(true, true).asDiagonal();
    out[Outcome::NoneDA] = rot * out[Outcome::NoneHV] * rot.adjoint();
    out[Outcome::D] = rot * out[Outcome::H] * rot.adjoint();
    out[Outcome::A] = rot * out[Outcome::V] * rot.adjoint();
    out[Outcome::DA] = rot * out[Outcome::HV] * rot.adjoint();
  } else {
    auto tensor_subset = [&](unsigned u) {
      Matrix t = Matrix::Identity(1, 1);
      for (int m = 0; m < mcount; ++m) {
        Eigen::MatrixXd blk = evmverify::detail::passive_subset_block(
            model.efficiencies.row(m), u, comp.counts[m]);
        t = kron(t, blk.cast<Complex>());
      }
      return t;
    };
    auto outcome_set_op = [&](unsigned t_mask) {
      Matrix m = Matrix::Zero(comp.dim, comp.dim);
      unsigned u = t_mask;
      while (true) {
        int parity = __builtin_popcount(t_mask) - __builtin_popcount(u);
        m += (parity % 2 == 0 ? 1.0 : -1.0) * tensor_subset(u);
        if (u == 0) break;
        u = (u - 1) & t_mask;
      }
      return m;
    };
    out[Outcome::None] = outcome_set_op(0);
    out[Outcome::H] = outcome_set_op(kDetH);
    out[Outcome::V] = outcome_set_op(kDetV);
    out[Outcome::D] = outcome_set_op(kDetD);
    out[Outcome::A] = outcome_set_op(kDetA);
    out[Outcome::HV] = outcome_set_op(kDetH | kDetV);
    out[Outcome::DA] = outcome_set_op(kDetD | kDetA);
    Matrix rest = Matrix::Identity(comp.dim, comp.dim);
    for (Outcome o : {Outcome::None, Outcome::H, Outcome::V, Outcome::D, Outcome::A,
                      Outcome::HV, Outcome::DA})
      rest -= out[o];
    out[Outcome::CC] = rest;
  }
  return out;
}

/// All compositions of n photons over m spatial modes.
inline std::vector<std::vector<int>> compositions(int n, int m) {
  std::vector<std::vector<int>> out;
  std::vector<int> cur(m, 0);
  std::function<void(int, int)> rec = [&](int mode, int rest) {
    if (mode == m - 1) {
      cur[mode] = rest;
      out.push_back(cur);
      return;
    }
    for (int k = rest; k >= 0; --k) {
      cur[mode] = k;
      rec(mode + 1, rest - k);
    }
  };
  rec(0, n);
  return out;
}

/// Bob-side witness block on one composition.
inline Matrix witness_bob_block(WitnessKind kind, const std::map<Outcome, Matrix>& ops) {
  switch (kind) {
    case WitnessKind::DoubleClick:
      return 0.5 * (ops.at(Outcome::HV) + ops.at(Outcome::DA));
    case WitnessKind::CrossClick:
      return ops.at(Outcome::CC);
    case WitnessKind::EffectiveError:
      throw std::logic_error("effective error needs the Alice side");
  }
  return {};
}

/// min Tr(rho F) over real symmetric rho >= 0, Tr rho = 1, rho^Gamma >= 0 on
/// (Alice qubit) x (composition block). Returns value and a certified lower
/// bound gap estimate via the solver's dual.
inline std::pair<double, SdpStatus> min_over_block(const Matrix& f_joint, int bob_dim,
                                                   const SdpSettings& settings) {
  const int d = 2 * bob_dim;
  // Real symmetric parametrization: all cells except the last diagonal,
  // which carries the trace constraint.
  std::vector<std::pair<int, int>> cells;
  for (int r = 0; r < d; ++r)
    for (int c = 0; c <= r; ++c)
      if (!(r == c && r == d - 1)) cells.emplace_back(r, c);
  const int k = int(cells.size());

  SdpProblem p;
  p.objective.resize(k);
  SdpBlockDef rho_blk, ppt_blk;
  rho_blk.dim = ppt_blk.dim = d;
  rho_blk.f0 = Matrix::Identity(d, d) / d;
  ppt_blk.f0 = Matrix::Identity(d, d) / d;
  rho_blk.coeffs.resize(k);
  ppt_blk.coeffs.resize(k);
  Eigen::MatrixXd fr = f_joint.real();
  auto gamma = [&](int r, int c) {
    int i = r / bob_dim, j = r % bob_dim, kk = c / bob_dim, l = c % bob_dim;
    return std::pair<int, int>{kk * bob_dim + j, i * bob_dim + l};
  };
  auto put = [](std::vector<SdpCoeff>& list, int r, int c, double v) {
    if (r < c) std::swap(r, c);
    list.push_back({r, c, v});
  };
  for (int i = 0; i < k; ++i) {
    auto [r, c] = cells[i];
    double obj = (r == c ? 1.0 : 2.0) * fr(r, c);
    put(rho_blk.coeffs[i], r, c, 1.0);
    auto [gr, gc] = gamma(r, c);
    put(ppt_blk.coeffs[i], gr, gc, 1.0);
    if (r == c) {
      put(rho_blk.coeffs[i], d - 1, d - 1, -1.0);
      put(ppt_blk.coeffs[i], d - 1, d - 1, -1.0);
      obj -= fr(d - 1, d - 1);
    }
    p.objective(i) = -obj;  // maximize the negative
  }
  p.blocks.push_back(std::move(rho_blk));
  p.blocks.push_back(std::move(ppt_blk));
  BarrierBackend backend;
  SdpResult res = backend.solve(p, Eigen::VectorXd::Zero(k), settings);
  // The objective excluded the base point <I/d, F>; add it back.
  double value = -res.objective_value + fr.trace() / d;
  return {value, res.status};
}

}  // namespace detail

struct PhotonBoundSettings {
  SdpSettings sdp;
  /// Alice-trivial witnesses reduce exactly to a minimum-eigenvalue
  /// computation; the SDP route is kept for cross-checks.
  bool force_sdp = false;
};

/// Joint witness operators on the full truncated space (used by tests and
/// the statistics-level checks).
inline Matrix build_witness(WitnessKind kind, const SchemeConfig& config,
                            const PovmSet& povm) {
  const int s = povm.space->dim();
  Matrix ia = Matrix::Identity(2, 2);
  switch (kind) {
    case WitnessKind::DoubleClick:
      if (config.scheme != Scheme::active)
        throw std::invalid_argument("double-click witness is an active-scheme object");
      return kron(ia, 0.5 * (povm.at(Outcome::HV).mat + povm.at(Outcome::DA).mat));
    case WitnessKind::CrossClick:
      if (config.scheme != Scheme::passive)
        throw std::invalid_argument("cross-click witness is a passive-scheme object");
      return kron(ia, povm.at(Outcome::CC).mat);
    case WitnessKind::EffectiveError: {
      if (config.scheme != Scheme::active)
        throw std::invalid_argument("effective-error witness is an active-scheme object");
      auto aproj = [&](Outcome x) {
        Matrix m = Matrix::Zero(2, 2);
        for (const auto& [ik, alpha] : detail::alice_projector(x))
          m(ik.first, ik.second) += alpha;
        return m;
      };
      Matrix f = Matrix::Zero(2 * s, 2 * s);
      f += 0.5 * kron(0.5 * aproj(Outcome::H),
                      povm.at(Outcome::V).mat + 0.5 * povm.at(Outcome::HV).mat);
      f += 0.5 * kron(0.5 * aproj(Outcome::V),
                      povm.at(Outcome::H).mat + 0.5 * povm.at(Outcome::HV).mat);
      f += 0.5 * kron(0.5 * aproj(Outcome::D),
                      povm.at(Outcome::A).mat + 0.5 * povm.at(Outcome::DA).mat);
      f += 0.5 * kron(0.5 * aproj(Outcome::A),
                      povm.at(Outcome::D).mat + 0.5 * povm.at(Outcome::DA).mat);
      return f;
    }
  }
  return {};
}

/// Minimum witness expectation over real PPT states confined to the
/// n-photon block: the d_{n,min} / e_{n,min} / c_{n,min} programs. States
/// can be taken block-diagonal across spatial compositions, so the problem
/// splits into one small SDP (or eigenvalue computation) per composition.
inline BoundEntry min_witness_over_grade(WitnessKind kind, int n, const SchemeConfig& config,
                                         const DetectorModel& model,
                                         const PhotonBoundSettings& settings = {}) {
  BoundEntry entry{kind, n, 1.0, SdpStatus::Optimal};
  if ((kind == WitnessKind::CrossClick) != (config.scheme == Scheme::passive))
    throw std::invalid_argument("witness kind does not match the detection scheme");
  if (n == 0 || (n == 1 && kind != WitnessKind::EffectiveError)) {
    // No clicks from vacuum; one photon cannot double- or cross-click.
    entry.value = 0.0;
    return entry;
  }

  double best = 1.0;
  SdpStatus worst = SdpStatus::Optimal;
  for (const auto& comp : detail::compositions(n, config.spatial_modes)) {
    detail::CompositionSpace cs(comp);
    auto ops = detail::composition_block_ops(config, model, cs);
    double value;
    if (kind == WitnessKind::EffectiveError) {
      auto aproj = [&](Outcome x) {
        Matrix m = Matrix::Zero(2, 2);
        for (const auto& [ik, alpha] : detail::alice_projector(x))
          m(ik.first, ik.second) += alpha;
        return m;
      };
      Matrix f = Matrix::Zero(2 * cs.dim, 2 * cs.dim);
      f += 0.5 * kron(0.5 * aproj(Outcome::H),
                      ops.at(Outcome::V) + 0.5 * ops.at(Outcome::HV));
      f += 0.5 * kron(0.5 * aproj(Outcome::V),
                      ops.at(Outcome::H) + 0.5 * ops.at(Outcome::HV));
      f += 0.5 * kron(0.5 * aproj(Outcome::D),
                      ops.at(Outcome::A) + 0.5 * ops.at(Outcome::DA));
      f += 0.5 * kron(0.5 * aproj(Outcome::A),
                      ops.at(Outcome::D) + 0.5 * ops.at(Outcome::DA));
      auto [v, status] = detail::min_over_block(f, cs.dim, settings.sdp);
      value = v;
      if (status != SdpStatus::Optimal) worst = status;
    } else {
      Matrix bob = detail::witness_bob_block(kind, ops);
      if (settings.force_sdp) {
        Matrix f = kron(Matrix::Identity(2, 2), bob);
        auto [v, status] = detail::min_over_block(f, cs.dim, settings.sdp);
        value = v;
        if (status != SdpStatus::Optimal) worst = status;
      } else {
        // The witness acts as identity on Alice, so the PPT-constrained
        // minimum is attained on product states and equals the smallest
        // eigenvalue of Bob's block (the SDP route is asserted equal in
        // tests).
        Eigen::SelfAdjointEigenSolver<Matrix> es(bob, Eigen::EigenvaluesOnly);
        value = es.eigenvalues().minCoeff();
      }
    }
    best = std::min(best, value);
  }
  entry.value = std::min(std::max(best, 0.0), 1.0);
  entry.status = worst;
  return entry;
}

/// Table of minimum probabilities through photon number n_max.
inline PhotonBoundTable build_bound_table(const SchemeConfig& config,
                                          const DetectorModel& model, int n_max,
                                          const PhotonBoundSettings& settings = {}) {
  PhotonBoundTable table;
  table.scheme = config.scheme;
  std::vector<WitnessKind> kinds =
      config.scheme == Scheme::active
          ? std::vector<WitnessKind>{WitnessKind::DoubleClick, WitnessKind::EffectiveError}
          : std::vector<WitnessKind>{WitnessKind::CrossClick};
  for (WitnessKind kind : kinds)
    for (int n = 0; n <= n_max; ++n)
      table.rows.push_back(min_witness_over_grade(kind, n, config, model, settings));
  return table;
}

/// Tail inequality constants for the EVM compiler: the active scheme needs
/// the table through n = 3, the passive one through n = 2.
inline TailBounds photon_tail_bounds(const PhotonBoundTable& table) {
  TailBounds tails;
  if (table.scheme == Scheme::active) {
    auto d3 = table.value(WitnessKind::DoubleClick, 3);
    auto e3 = table.value(WitnessKind::EffectiveError, 3);
    if (!d3 || !e3)
      throw std::invalid_argument("photon_tail_bounds: table must reach n = 3");
    tails.d3_min = *d3;
    tails.e3_min = *e3;
  } else {
    auto c2 = table.value(WitnessKind::CrossClick, 2);
    if (!c2) throw std::invalid_argument("photon_tail_bounds: table must reach n = 2");
    tails.c2_min = *c2;
  }
  return tails;
}

}  // namespace evmverify

#endif  // EVMVERIFY_PHOTON_BOUNDS_HPP
