// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>
#include <complex>
#include <cstdint>
#include <random>

namespace beamalign {

using cxd = std::complex<double>;
using MatC = Eigen::MatrixXcd;
using VecC = Eigen::VectorXcd;
using MatR = Eigen::MatrixXd;
using VecR = Eigen::VectorXd;

/// Deterministic circularly-symmetric complex Gaussian stream.
///
/// Built on mt19937_64 with an explicit uniform->double mapping and a
/// Box-Muller transform, so a given seed reproduces the same bits on every
/// platform (std::normal_distribution makes no such guarantee). Each draw
/// consumes two uniforms; the real component comes from the cosine branch
/// and is determined before the imaginary component (sine branch). Real and
/// imaginary parts each have variance 1/2, so |z|^2 has unit mean.
class ComplexGaussian {
 public:
  explicit ComplexGaussian(std::uint64_t seed) : eng_(seed) {}

  /// One CN(0,1) sample.
  cxd operator()() {
    const double u1 = uniform01();
    const double u2 = uniform01();
    const double r = std::sqrt(-std::log(u1));
    const double angle = 2.0 * M_PI * u2;
    return {r * std::cos(angle), r * std::sin(angle)};
  }

  /// Uniform draw in (0, 1]; strictly positive so log() is always finite.
  double uniform01() {
    const std::uint64_t bits = eng_();
    return static_cast<double>((bits >> 11) + 1) * 0x1.0p-53;
  }

 private:
  std::mt19937_64 eng_;
};

/// Derives an independent child seed from a master seed and a task index,
/// so parallel tasks never share an RNG stream.
std::uint64_t split_seed(std::uint64_t master, std::uint64_t index);

/// rows x cols matrix of i.i.d. CN(0,1) entries, filled row-major.
MatC random_complex_gaussian(ComplexGaussian& rng, int rows, int cols);

/// Haar-ish random unitary (QR of a complex Gaussian matrix).
MatC random_unitary(ComplexGaussian& rng, int n);

/// Scales each column to unit 2-norm (columns of zero norm are left alone).
void normalize_columns(MatC& block);

/// Rotates each column so its largest-magnitude entry is real positive.
void fix_column_phases(MatC& block);

/// Thin QR orthonormalization with the convention that the diagonal of the
/// triangular factor is real positive, which makes the result deterministic.
MatC qr_orthonormal(const MatC& block);

/// The `count` eigenvectors of a Hermitian matrix with smallest eigenvalues,
/// as an orthonormal M x count block. Eigenvalues ascend; ties are broken by
/// lexicographic comparison of rounded eigenvector entries and each column's
/// phase is fixed so the selection is deterministic under degenerate spectra.
/// When `eigenvalues_out` is non-null it receives all eigenvalues ascending.
MatC smallest_eigenvectors(const MatC& hermitian, int count,
                           VecR* eigenvalues_out = nullptr);

/// log2(det(A)) for Hermitian positive definite A via Cholesky.
double logdet2_hermitian_pd(const MatC& matrix);

/// Count of singular values above max_dim * sigma_max * 1e-10.
int numerical_rank(const VecR& singular_values, int max_dim);

/// sqrt(sum_m min_phase ||a_m - e^{j phi} b_m||^2): column-wise distance that
/// ignores per-column phase but not column order.
double phase_aligned_column_distance(const MatC& a, const MatC& b);

}  // namespace beamalign
