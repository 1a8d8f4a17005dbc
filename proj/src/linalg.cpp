// SPDX-License-Identifier: Apache-2.0
#include "beamalign/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "beamalign/errors.hpp"

namespace beamalign {

std::uint64_t split_seed(std::uint64_t master, std::uint64_t index) {
  // splitmix64 finalizer over master advanced by the index.
  std::uint64_t z = master + 0x9E3779B97F4A7C15ull * (index + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

MatC random_complex_gaussian(ComplexGaussian& rng, int rows, int cols) {
  MatC out(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) out(i, j) = rng();
  return out;
}

MatC random_unitary(ComplexGaussian& rng, int n) {
  return qr_orthonormal(random_complex_gaussian(rng, n, n));
}

void normalize_columns(MatC& block) {
  for (int j = 0; j < block.cols(); ++j) {
    const double n = block.col(j).norm();
    if (n > 0.0) block.col(j) /= n;
  }
}

void fix_column_phases(MatC& block) {
  for (int j = 0; j < block.cols(); ++j) {
    Eigen::Index imax = 0;
    block.col(j).cwiseAbs().maxCoeff(&imax);
    const cxd pivot = block(imax, j);
    const double mag = std::abs(pivot);
    if (mag > 0.0) block.col(j) *= std::conj(pivot) / mag;
  }
}

MatC qr_orthonormal(const MatC& block) {
  const Eigen::Index cols = block.cols();
  Eigen::HouseholderQR<MatC> qr(block);
  MatC q = qr.householderQ() * MatC::Identity(block.rows(), cols);
  const MatC& qrmat = qr.matrixQR();
  for (Eigen::Index j = 0; j < cols; ++j) {
    const cxd r = qrmat(j, j);
    const double mag = std::abs(r);
    if (mag > 0.0) q.col(j) *= r / mag;  // makes (Q^H A)(j,j) = |r| > 0
  }
  return q;
}

namespace {

// Lexicographic key over rounded (re, im) pairs; only consulted for
// eigenvalue ties, where the basis returned by the solver is arbitrary.
bool lex_less(const VecC& a, const VecC& b) {
  constexpr double kScale = 1e9;
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    const double re_a = std::round(a(i).real() * kScale);
    const double re_b = std::round(b(i).real() * kScale);
    if (re_a != re_b) return re_a < re_b;
    const double im_a = std::round(a(i).imag() * kScale);
    const double im_b = std::round(b(i).imag() * kScale);
    if (im_a != im_b) return im_a < im_b;
  }
  return false;
}

}  // namespace

MatC smallest_eigenvectors(const MatC& hermitian, int count,
                           VecR* eigenvalues_out) {
  Eigen::SelfAdjointEigenSolver<MatC> solver(hermitian);
  if (solver.info() != Eigen::Success)
    throw std::runtime_error("hermitian eigendecomposition failed");
  const VecR& values = solver.eigenvalues();  // ascending
  MatC vectors = solver.eigenvectors();
  fix_column_phases(vectors);

  // Within runs of (numerically) equal eigenvalues the solver's basis order
  // is arbitrary; reorder each run lexicographically so degenerate spectra
  // still select deterministically.
  std::vector<int> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  const double scale = std::max(1.0, std::abs(values(values.size() - 1)));
  const double tol = 1e-12 * scale;
  std::size_t start = 0;
  while (start < order.size()) {
    std::size_t stop = start + 1;
    while (stop < order.size() &&
           values(stop) - values(stop - 1) <= tol)
      ++stop;
    if (stop - start > 1)
      std::sort(order.begin() + start, order.begin() + stop,
                [&](int i, int j) {
                  return lex_less(vectors.col(i), vectors.col(j));
                });
    start = stop;
  }

  MatC out(hermitian.rows(), count);
  for (int j = 0; j < count; ++j) out.col(j) = vectors.col(order[j]);
  if (eigenvalues_out) *eigenvalues_out = values;
  return out;
}

double logdet2_hermitian_pd(const MatC& matrix) {
  Eigen::LLT<MatC> llt(matrix);
  if (llt.info() != Eigen::Success)
    throw std::runtime_error("Cholesky failed: matrix not positive definite");
  double acc = 0.0;
  const MatC l = llt.matrixL();
  for (Eigen::Index i = 0; i < matrix.rows(); ++i)
    acc += std::log2(l(i, i).real());
  return 2.0 * acc;
}

int numerical_rank(const VecR& singular_values, int max_dim) {
  if (singular_values.size() == 0) return 0;
  const double thresh = max_dim * singular_values.maxCoeff() * 1e-10;
  int rank = 0;
  for (Eigen::Index i = 0; i < singular_values.size(); ++i)
    if (singular_values(i) > thresh) ++rank;
  return rank;
}

double phase_aligned_column_distance(const MatC& a, const MatC& b) {
  double acc = 0.0;
  for (int j = 0; j < a.cols(); ++j) {
    const double term = a.col(j).squaredNorm() + b.col(j).squaredNorm() -
                        2.0 * std::abs(a.col(j).dot(b.col(j)));
    acc += std::max(0.0, term);
  }
  return std::sqrt(acc);
}

}  // namespace beamalign
