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

#ifndef EVMVERIFY_FOCK_HPP
#define EVMVERIFY_FOCK_HPP

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <cstdint>
#include <memory>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

namespace evmverify {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using RealMatrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXcd;

/// Occupation numbers, one entry per (spatial, polarization) mode,
/// spatial-major / polarization-minor.
using Occupation = std::vector<int>;

inline double binomial(int n, int k) {
  if (k < 0 || k > n) return 0.0;
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * double(n - k + i) / double(i);
  return r;
}

inline double factorial(int n) {
  double r = 1.0;
  for (int i = 2; i <= n; ++i) r *= double(i);
  return r;
}

/// Which polarization pair the basis labels refer to. The rotated view uses
/// the diagonal/anti-diagonal pair; mode layout is otherwise identical.
enum class PolarizationView { HV, DA };

struct ModeSet {
  int spatial_modes = 1;
  PolarizationView view = PolarizationView::HV;

  int mode_count() const { return 2 * spatial_modes; }
};

/// Truncated multimode photon-number basis: all occupation vectors with
/// total <= cutoff, graded by total photon number and lexicographically
/// descending within a grade.
class FockSpace {
 public:
  static std::shared_ptr<const FockSpace> enumerate(ModeSet modes, int cutoff) {
    if (cutoff < 0) throw std::invalid_argument("FockSpace: cutoff must be >= 0");
    if (modes.spatial_modes < 1)
      throw std::invalid_argument("FockSpace: need at least one spatial mode");
    return std::shared_ptr<const FockSpace>(new FockSpace(modes, cutoff));
  }

  const ModeSet& modes() const { return modes_; }
  int cutoff() const { return cutoff_; }
  int dim() const { return int(basis_.size()); }
  const std::vector<Occupation>& basis() const { return basis_; }
  const Occupation& state(int idx) const { return basis_[idx]; }
  int total_photons(int idx) const { return totals_[idx]; }

  int index_of(const Occupation& occ) const {
    auto it = index_.find(pack(occ));
    if (it == index_.end()) throw std::invalid_argument("FockSpace: state outside basis");
    return it->second;
  }

  bool contains(const Occupation& occ) const { return index_.count(pack(occ)) != 0; }

  /// First basis index of the given total-photon grade.
  int grade_begin(int n) const { return grade_begin_.at(n); }
  /// One past the last basis index of the grade.
  int grade_end(int n) const { return grade_end_.at(n); }
  int grade_dim(int n) const { return grade_end(n) - grade_begin(n); }

  std::shared_ptr<const FockSpace> with_view(PolarizationView v) const {
    ModeSet m = modes_;
    m.view = v;
    return enumerate(m, cutoff_);
  }

 private:
  FockSpace(ModeSet modes, int cutoff) : modes_(modes), cutoff_(cutoff) {
    Occupation occ(modes.mode_count(), 0);
    grade_begin_.resize(cutoff + 1);
    grade_end_.resize(cutoff + 1);
    for (int n = 0; n <= cutoff; ++n) {
      grade_begin_[n] = int(basis_.size());
      fill_grade(occ, 0, n);
      grade_end_[n] = int(basis_.size());
    }
    for (int i = 0; i < dim(); ++i) index_[pack(basis_[i])] = i;
  }

  void fill_grade(Occupation& occ, int mode, int remaining) {
    if (mode == int(occ.size()) - 1) {
      occ[mode] = remaining;
      basis_.push_back(occ);
      totals_.push_back(remaining + sum_prefix(occ, mode));
      return;
    }
    for (int k = remaining; k >= 0; --k) {
      occ[mode] = k;
      fill_grade(occ, mode + 1, remaining - k);
    }
    occ[mode] = 0;
  }

  static int sum_prefix(const Occupation& occ, int upto) {
    int s = 0;
    for (int i = 0; i < upto; ++i) s += occ[i];
    return s;
  }

  static std::uint64_t pack(const Occupation& occ) {
    std::uint64_t key = 0;
    for (int v : occ) key = key * 64u + std::uint64_t(v + 1);
    return key;
  }

  ModeSet modes_;
  int cutoff_;
  std::vector<Occupation> basis_;
  std::vector<int> totals_;
  std::vector<int> grade_begin_, grade_end_;
  std::unordered_map<std::uint64_t, int> index_;
};

using SpacePtr = std::shared_ptr<const FockSpace>;

inline SpacePtr enumerate_basis(ModeSet modes, int cutoff) {
  return FockSpace::enumerate(modes, cutoff);
}

/// Dense Hermitian operator on a truncated Fock space. Entries below
/// 1e-14 in magnitude are snapped to zero before the structural flags
/// (block-diagonality, realness) are computed.
struct FockOperator {
  SpacePtr space;
  Matrix mat;
  bool block_diagonal = false;
  bool real = false;

  FockOperator() = default;
  FockOperator(SpacePtr s, Matrix m) : space(std::move(s)), mat(std::move(m)) {
    if (mat.rows() != space->dim() || mat.cols() != space->dim())
      throw std::invalid_argument("FockOperator: matrix/space dimension mismatch");
    snap_and_classify();
  }

  int dim() const { return int(mat.rows()); }

  void snap_and_classify() {
    for (int c = 0; c < mat.cols(); ++c)
      for (int r = 0; r < mat.rows(); ++r) {
        Complex& z = mat(r, c);
        double re = std::abs(z.real()) < 1e-14 ? 0.0 : z.real();
        double im = std::abs(z.imag()) < 1e-14 ? 0.0 : z.imag();
        z = Complex(re, im);
      }
    block_diagonal = true;
    real = true;
    for (int c = 0; c < mat.cols() && (block_diagonal || real); ++c)
      for (int r = 0; r < mat.rows(); ++r) {
        if (mat(r, c) == Complex(0.0, 0.0)) continue;
        if (space->total_photons(r) != space->total_photons(c)) block_diagonal = false;
        if (mat(r, c).imag() != 0.0) real = false;
      }
  }

  double hermiticity_defect() const {
    return (mat - mat.adjoint()).cwiseAbs().maxCoeff();
  }
};

inline FockOperator identity_operator(const SpacePtr& space) {
  return FockOperator(space, Matrix::Identity(space->dim(), space->dim()));
}

inline FockOperator vacuum_projector(const SpacePtr& space) {
  Matrix m = Matrix::Zero(space->dim(), space->dim());
  m(0, 0) = 1.0;
  return FockOperator(space, m);
}

/// Zeroes all entries outside the total-photon-number-n block.
inline FockOperator grade_project(const FockOperator& op, int n) {
  if (n < 0 || n > op.space->cutoff())
    throw std::invalid_argument("grade_project: grade outside cutoff; raise the cutoff");
  Matrix m = Matrix::Zero(op.dim(), op.dim());
  int b = op.space->grade_begin(n), e = op.space->grade_end(n);
  m.block(b, b, e - b, e - b) = op.mat.block(b, b, e - b, e - b);
  return FockOperator(op.space, std::move(m));
}

namespace detail {

/// Coefficients of (h^dag + v^dag)^nd (h^dag - v^dag)^na |0> on the states
/// |p, nd+na-p>, including the 1/sqrt(2)^(nd+na) splitter normalization and
/// the sqrt(p!(g-p)!/(nd!na!)) Fock normalization. All real.
inline std::vector<double> da_pair_expansion(int nd, int na) {
  int g = nd + na;
  std::vector<double> out(g + 1, 0.0);
  for (int p = 0; p <= g; ++p) {
    double s = 0.0;
    for (int j = std::max(0, p - na); j <= std::min(nd, p); ++j)
      s += binomial(nd, j) * binomial(na, p - j) * ((na - (p - j)) % 2 == 0 ? 1.0 : -1.0);
    out[p] = s * std::pow(0.5, 0.5 * g) *
             std::sqrt(factorial(p) * factorial(g - p) / (factorial(nd) * factorial(na)));
  }
  return out;
}

/// Unitary taking DA-view coordinates to HV-view coordinates: column c holds
/// the HV components of the c-th DA basis state. Real and grade-preserving.
inline RealMatrix rotation_to_hv(const FockSpace& space) {
  int d = space.dim();
  int s_count = space.modes().spatial_modes;
  RealMatrix r = RealMatrix::Zero(d, d);
  for (int c = 0; c < d; ++c) {
    const Occupation& occ = space.state(c);
    // Tensor the per-spatial-mode expansions.
    std::vector<std::pair<Occupation, double>> acc = {{Occupation(), 1.0}};
    for (int s = 0; s < s_count; ++s) {
      int nd = occ[2 * s], na = occ[2 * s + 1];
      std::vector<double> coeff = da_pair_expansion(nd, na);
      std::vector<std::pair<Occupation, double>> next;
      for (const auto& [partial, w] : acc)
        for (int p = 0; p <= nd + na; ++p) {
          if (coeff[p] == 0.0) continue;
          Occupation ext = partial;
          ext.push_back(p);
          ext.push_back(nd + na - p);
          next.emplace_back(std::move(ext), w * coeff[p]);
        }
      acc = std::move(next);
    }
    for (const auto& [state, w] : acc) r(space.index_of(state), c) += w;
  }
  return r;
}

}  // namespace detail

/// Re-expresses an operator in the opposite polarization view via the
/// linear-optics splitter unitary lifted to the truncated space.
inline FockOperator basis_rotate(const FockOperator& op) {
  const FockSpace& sp = *op.space;
  RealMatrix r = detail::rotation_to_hv(sp);
  PolarizationView target = sp.modes().view == PolarizationView::DA
                                ? PolarizationView::HV
                                : PolarizationView::DA;
  SpacePtr out_space = sp.with_view(target);
  Matrix m;
  if (target == PolarizationView::HV)
    m = r * op.mat * r.transpose();
  else
    m = r.transpose() * op.mat * r;
  return FockOperator(out_space, std::move(m));
}

/// Adjoint of the single-mode loss channel with transmittance eta applied to
/// every mode. Exact on the truncated space since loss only lowers photon
/// numbers.
inline FockOperator loss_adjoint(const FockOperator& op, double eta) {
  if (eta < 0.0 || eta > 1.0) throw std::invalid_argument("loss_adjoint: eta outside [0,1]");
  const FockSpace& sp = *op.space;
  int mcount = sp.modes().mode_count();
  Matrix out = Matrix::Zero(sp.dim(), sp.dim());
  // Scatter each source entry (a, b) to targets (a + j, b + j).
  std::vector<int> j(mcount, 0);
  for (int col = 0; col < sp.dim(); ++col)
    for (int row = 0; row < sp.dim(); ++row) {
      Complex v = op.mat(row, col);
      if (v == Complex(0.0, 0.0)) continue;
      const Occupation& a = sp.state(row);
      const Occupation& b = sp.state(col);
      int ta = sp.total_photons(row), tb = sp.total_photons(col);
      int room = sp.cutoff() - std::max(ta, tb);
      std::fill(j.begin(), j.end(), 0);
      while (true) {
        double w = std::pow(eta, 0.5 * (ta + tb));
        Occupation m(mcount), n(mcount);
        int jt = 0;
        for (int k = 0; k < mcount; ++k) {
          m[k] = a[k] + j[k];
          n[k] = b[k] + j[k];
          jt += j[k];
          w *= std::sqrt(binomial(m[k], j[k]) * binomial(n[k], j[k]));
        }
        w *= std::pow(1.0 - eta, jt);
        if (w != 0.0) out(sp.index_of(m), sp.index_of(n)) += w * v;
        // Next multi-index with total <= room.
        int t = jt, pos = 0;
        while (pos < mcount && t + 1 > room) {
          t -= j[pos];
          j[pos] = 0;
          ++pos;
        }
        if (pos == mcount) break;
        ++j[pos];
      }
    }
  return FockOperator(sp.with_view(sp.modes().view), std::move(out));
}

/// Kronecker product helper for Alice (first factor) x Bob (second) joints.
inline Matrix kron(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

}  // namespace evmverify

#endif  // EVMVERIFY_FOCK_HPP
