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

#ifndef EVMVERIFY_SDP_HPP
#define EVMVERIFY_SDP_HPP

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <map>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

namespace evmverify {

/// One sparse coefficient of a variable inside a Hermitian LMI block.
/// Only the lower triangle (row >= col) is stored; the conjugate mirror
/// is implied. Diagonal coefficients must be real.
struct SdpCoeff {
  int row, col;
  std::complex<double> value;
};

/// Affine Hermitian block F(y) = f0 + sum_i y_i F_i, constrained PSD.
struct SdpBlockDef {
  int dim = 0;
  Eigen::MatrixXcd f0;
  std::vector<std::vector<SdpCoeff>> coeffs;  // indexed by variable
  /// Choose the dense Hessian path (per-variable matrices materialized)
  /// when coefficients are dense, e.g. null-space parametrizations.
  bool dense_hessian = false;

  void materialize(const Eigen::VectorXd& y, Eigen::MatrixXcd& out) const {
    out = f0;
    for (int i = 0; i < int(coeffs.size()); ++i) {
      if (y(i) == 0.0) continue;
      for (const SdpCoeff& c : coeffs[i]) {
        out(c.row, c.col) += y(i) * c.value;
        if (c.row != c.col) out(c.col, c.row) += y(i) * std::conj(c.value);
      }
    }
  }

  Eigen::MatrixXcd coefficient_matrix(int var) const {
    Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(dim, dim);
    for (const SdpCoeff& c : coeffs[var]) {
      m(c.row, c.col) += c.value;
      if (c.row != c.col) m(c.col, c.row) += std::conj(c.value);
    }
    return m;
  }
};

/// maximize objective . y  subject to every block PSD.
struct SdpProblem {
  Eigen::VectorXd objective;
  std::vector<SdpBlockDef> blocks;

  int variables() const { return int(objective.size()); }
  int total_dim() const {
    int t = 0;
    for (const auto& b : blocks) t += b.dim;
    return t;
  }
};

enum class SdpStatus { Optimal, Inaccurate, Failed };

inline std::string to_string(SdpStatus s) {
  switch (s) {
    case SdpStatus::Optimal: return "optimal";
    case SdpStatus::Inaccurate: return "inaccurate";
    case SdpStatus::Failed: return "failed";
  }
  return "?";
}

struct SdpResult {
  SdpStatus status = SdpStatus::Failed;
  Eigen::VectorXd y;
  double objective_value = 0.0;
  double gap = 0.0;  // barrier duality gap at exit
  std::vector<Eigen::MatrixXcd> dual;  // PSD multipliers, one per block
  int newton_steps = 0;
};

struct SdpSettings {
  double gap_tol = 1e-10;   // stop when mu * total_dim < gap_tol
  double sigma = 0.1;       // barrier reduction factor
  int max_newton = 3000;
  double path_tol = 1e-6;   // squared Newton decrement along the path
  double final_tol = 1e-13; // squared Newton decrement at the last mu
};

/// Interior-point style solver interface. Deterministic for fixed settings.
class SolverBackend {
 public:
  virtual ~SolverBackend() = default;
  virtual std::string name() const = 0;
  /// `start` must be strictly feasible (all blocks PD).
  virtual SdpResult solve(const SdpProblem& p, const Eigen::VectorXd& start,
                          const SdpSettings& settings) const = 0;
};

/// Log-det barrier path following with dense Newton steps.
class BarrierBackend final : public SolverBackend {
 public:
  std::string name() const override { return "barrier"; }

  SdpResult solve(const SdpProblem& p, const Eigen::VectorXd& start,
                  const SdpSettings& settings) const override {
    using Eigen::MatrixXcd;
    const int k = p.variables();
    const int nblocks = int(p.blocks.size());
    SdpResult res;
    res.y = start;

    std::vector<MatrixXcd> f(nblocks), w(nblocks), ftrial(nblocks);
    // Dense coefficient matrices for blocks on the dense Hessian path.
    std::vector<std::vector<MatrixXcd>> dense_coeff(nblocks);
    for (int b = 0; b < nblocks; ++b)
      if (p.blocks[b].dense_hessian) {
        dense_coeff[b].resize(k);
        for (int i = 0; i < k; ++i)
          if (!p.blocks[b].coeffs[i].empty())
            dense_coeff[b][i] = p.blocks[b].coefficient_matrix(i);
      }

    double logdet = 0.0;
    auto factor = [&](const Eigen::VectorXd& y, std::vector<MatrixXcd>& fout,
                      double& ld) -> bool {
      ld = 0.0;
      for (int b = 0; b < nblocks; ++b) {
        p.blocks[b].materialize(y, fout[b]);
        Eigen::LLT<MatrixXcd> llt(fout[b]);
        if (llt.info() != Eigen::Success) return false;
        MatrixXcd l = llt.matrixL();
        for (int i = 0; i < l.rows(); ++i) {
          double piv = l(i, i).real();
          if (piv <= 0.0) return false;
          ld += 2.0 * std::log(piv);
        }
      }
      return true;
    };
    auto inverses = [&]() {
      for (int b = 0; b < nblocks; ++b)
        w[b] = f[b].llt().solve(MatrixXcd::Identity(f[b].rows(), f[b].cols()));
    };

    if (!factor(res.y, f, logdet)) {
      res.status = SdpStatus::Failed;
      return res;
    }
    inverses();

    const int nu = p.total_dim();
    double mu = 0.0;
    for (int b = 0; b < nblocks; ++b) mu += f[b].trace().real();
    mu = std::max(mu / nu, 1e-3);
    const double mu_floor = settings.gap_tol / (4.0 * nu);

    Eigen::VectorXd g(k), step(k);
    Eigen::MatrixXd hess(k, k);
    MatrixXcd m_i, g_i;
    std::vector<MatrixXcd> whitened(k);

    int newton = 0;
    bool done = false;
    while (!done && newton < settings.max_newton) {
      const bool final_stage = mu <= mu_floor * 4.0;
      const double decrement_tol = final_stage ? settings.final_tol : settings.path_tol;
      bool centered = false;
      int stalls = 0, inner = 0;
      while (newton < settings.max_newton && inner < 80) {
        ++inner;
        ++newton;
        // Barrier-normalized psi(y) = -(c.y)/mu - sum_b logdet F_b(y).
        g = -p.objective / mu;
        hess.setZero();
        for (int b = 0; b < nblocks; ++b) {
          const auto& blk = p.blocks[b];
          auto grad_term = [&](int i) {
            double tr = 0.0;
            for (const SdpCoeff& c : blk.coeffs[i]) {
              if (c.row == c.col)
                tr += c.value.real() * w[b](c.row, c.col).real();
              else
                tr += 2.0 * (c.value * w[b](c.col, c.row)).real();
            }
            return tr;
          };
          if (blk.dense_hessian) {
            Eigen::LLT<MatrixXcd> llt(f[b]);
            MatrixXcd linv = MatrixXcd(llt.matrixL()).inverse();
            for (int i = 0; i < k; ++i) {
              if (blk.coeffs[i].empty()) continue;
              g(i) -= grad_term(i);
              whitened[i] = linv * dense_coeff[b][i] * linv.adjoint();
            }
            for (int i = 0; i < k; ++i) {
              if (blk.coeffs[i].empty()) continue;
              for (int j = i; j < k; ++j) {
                if (blk.coeffs[j].empty()) continue;
                hess(i, j) += whitened[i].conjugate().cwiseProduct(whitened[j]).sum().real();
              }
            }
          } else {
            for (int i = 0; i < k; ++i) {
              if (blk.coeffs[i].empty()) continue;
              g(i) -= grad_term(i);
              m_i.setZero(blk.dim, blk.dim);
              for (const SdpCoeff& c : blk.coeffs[i]) {
                m_i.noalias() += c.value * (w[b].col(c.row) * w[b].row(c.col));
                if (c.row != c.col)
                  m_i.noalias() += std::conj(c.value) * (w[b].col(c.col) * w[b].row(c.row));
              }
              for (int j = i; j < k; ++j) {
                if (blk.coeffs[j].empty()) continue;
                double hij = 0.0;
                for (const SdpCoeff& c : blk.coeffs[j]) {
                  if (c.row == c.col)
                    hij += c.value.real() * m_i(c.row, c.col).real();
                  else
                    hij += 2.0 * (c.value * m_i(c.col, c.row)).real();
                }
                hess(i, j) += hij;
              }
            }
          }
        }
        for (int i = 0; i < k; ++i)
          for (int j = 0; j < i; ++j) hess(i, j) = hess(j, i);

        Eigen::LDLT<Eigen::MatrixXd> ldlt(hess);
        step = ldlt.solve(-g);
        if (!step.allFinite()) {
          hess.diagonal().array() += 1e-12 * (1.0 + std::abs(hess.diagonal().maxCoeff()));
          step = hess.ldlt().solve(-g);
          if (!step.allFinite()) {
            res.status = SdpStatus::Failed;
            return res;
          }
        }
        double decrement = std::max(-g.dot(step), 0.0);
        if (decrement < decrement_tol) {
          centered = true;
          break;
        }

        const double psi = -p.objective.dot(res.y) / mu - logdet;
        double alpha = decrement > 1.0 ? 1.0 / (1.0 + std::sqrt(decrement)) : 1.0;
        bool moved = false;
        double psi_new = psi;
        for (int ls = 0; ls < 60; ++ls) {
          Eigen::VectorXd trial = res.y + alpha * step;
          double ld_trial;
          if (factor(trial, ftrial, ld_trial)) {
            double psi_trial = -p.objective.dot(trial) / mu - ld_trial;
            if (psi_trial <= psi - 1e-4 * alpha * decrement + 1e-10 * std::abs(psi)) {
              res.y = trial;
              f.swap(ftrial);
              logdet = ld_trial;
              inverses();
              moved = true;
              psi_new = psi_trial;
              break;
            }
          }
          alpha *= 0.5;
        }
        if (!moved) {
          centered = true;  // cannot improve further at this mu
          break;
        }
        if (psi - psi_new < 1e-13 * (1.0 + std::abs(psi))) {
          if (++stalls >= 2) {
            centered = true;
            break;
          }
        } else {
          stalls = 0;
        }
      }
      if (centered && final_stage) done = true;
      if (!done) mu = std::max(mu * settings.sigma, mu_floor);
    }

    res.newton_steps = newton;
    res.objective_value = p.objective.dot(res.y);
    res.gap = mu * nu;
    res.dual.resize(nblocks);
    for (int b = 0; b < nblocks; ++b) res.dual[b] = mu * w[b];
    res.status = done ? SdpStatus::Optimal : SdpStatus::Inaccurate;
    return res;
  }
};

inline std::unique_ptr<SolverBackend> make_backend(const std::string& name) {
  if (name.empty() || name == "barrier") return std::make_unique<BarrierBackend>();
  throw std::invalid_argument("unknown solver backend '" + name + "'");
}

/// Independent check of a dual certificate: one correction step in the
/// Z-weighted metric toward dual feasibility, a PSD clip, then the implied
/// objective bound evaluated with our own arithmetic. For dual-feasible
/// PSD Z the optimum satisfies  obj <= sum_b <Z_b, F0_b>;  leftover dual
/// infeasibility is charged against `var_bound`, an a-priori bound on |y_i|.
inline double certify_upper_bound(const SdpProblem& p,
                                  const std::vector<Eigen::MatrixXcd>& dual,
                                  double var_bound) {
  using Eigen::MatrixXcd;
  const int k = p.variables();
  const int nblocks = int(p.blocks.size());
  auto residual = [&](const std::vector<MatrixXcd>& z, Eigen::VectorXd& r) {
    for (int i = 0; i < k; ++i) {
      double v = p.objective(i);
      for (int b = 0; b < nblocks; ++b)
        for (const SdpCoeff& c : p.blocks[b].coeffs[i]) {
          if (c.row == c.col)
            v += c.value.real() * z[b](c.row, c.col).real();
          else
            v += 2.0 * (c.value * z[b](c.col, c.row)).real();
        }
      r(i) = v;
    }
  };
  Eigen::VectorXd r(k);
  residual(dual, r);

  // Correct in the Z-weighted metric: dZ = sum_i lambda_i Z F_i Z.
  Eigen::MatrixXd metric = Eigen::MatrixXd::Zero(k, k);
  std::vector<std::vector<MatrixXcd>> zfz(nblocks);
  for (int b = 0; b < nblocks; ++b) {
    const auto& blk = p.blocks[b];
    zfz[b].resize(k);
    for (int i = 0; i < k; ++i) {
      if (blk.coeffs[i].empty()) continue;
      zfz[b][i] = dual[b] * blk.coefficient_matrix(i) * dual[b];
    }
    for (int i = 0; i < k; ++i) {
      if (blk.coeffs[i].empty()) continue;
      for (int j = 0; j < k; ++j)
        for (const SdpCoeff& c : blk.coeffs[j]) {
          if (c.row == c.col)
            metric(j, i) += c.value.real() * zfz[b][i](c.row, c.col).real();
          else
            metric(j, i) += 2.0 * (c.value * zfz[b][i](c.col, c.row)).real();
        }
    }
  }
  metric = 0.5 * (metric + metric.transpose()).eval();
  metric.diagonal().array() += 1e-12 * (1.0 + metric.diagonal().cwiseAbs().maxCoeff());
  Eigen::VectorXd lambda = metric.ldlt().solve(-r);
  std::vector<MatrixXcd> z = dual;
  for (int b = 0; b < nblocks; ++b)
    for (int i = 0; i < k; ++i)
      if (!p.blocks[b].coeffs[i].empty()) z[b] += lambda(i) * zfz[b][i];
  for (int b = 0; b < nblocks; ++b) {
    Eigen::SelfAdjointEigenSolver<MatrixXcd> es(0.5 * (z[b] + z[b].adjoint()));
    Eigen::VectorXd evs = es.eigenvalues().cwiseMax(0.0);
    z[b] = es.eigenvectors() * evs.asDiagonal() * es.eigenvectors().adjoint();
  }
  residual(z, r);
  double bound = 0.0;
  for (int b = 0; b < nblocks; ++b)
    bound += z[b].conjugate().cwiseProduct(p.blocks[b].f0).sum().real();
  bound += r.cwiseAbs().sum() * var_bound;
  return bound;
}

}  // namespace evmverify

#endif  // EVMVERIFY_SDP_HPP
