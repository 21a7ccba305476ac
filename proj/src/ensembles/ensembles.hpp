#pragma once

#include <complex>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "common/rng.hpp"

namespace rmtlab::ensembles {

enum class EnsembleKind { Poisson, GOE, GUE, RpPoissonToGue, GoeToGue };

const char* kind_name(EnsembleKind k);
EnsembleKind parse_kind(const std::string& name);

struct EnsembleSpec {
  EnsembleKind kind = EnsembleKind::GUE;
  int dim = 400;
  double lambda = 0.0;
  double xi = 0.0;
  std::uint64_t master_seed = 0;
  int realizations = 1;

  void validate() const;
};

// Hermitian matrix stored as separate real and imaginary parts. The
// samplers fill the upper triangle and mirror it, so H(i,j) equals
// conj(H(j,i)) bit for bit.
class HermitianMatrix {
public:
  HermitianMatrix() = default;
  // Real symmetric matrix; asymmetry beyond tol is rejected.
  static HermitianMatrix from_real(Eigen::MatrixXd re, double tol = 1e-12);
  static HermitianMatrix from_complex(const Eigen::MatrixXcd& m, double tol = 1e-12);
  static HermitianMatrix from_parts(Eigen::MatrixXd re, Eigen::MatrixXd im, double tol = 1e-12);

  int dim() const { return static_cast<int>(re_.rows()); }
  bool is_real() const { return im_.size() == 0; }
  const Eigen::MatrixXd& re() const { return re_; }
  // Empty for real matrices.
  const Eigen::MatrixXd& im() const { return im_; }
  std::complex<double> operator()(int i, int j) const {
    return {re_(i, j), is_real() ? 0.0 : im_(i, j)};
  }
  Eigen::MatrixXcd dense() const;
  double trace() const { return re_.trace(); }
  // Largest |H(i,j) - conj(H(j,i))|.
  double hermiticity_defect() const;

private:
  Eigen::MatrixXd re_;
  Eigen::MatrixXd im_;
};

HermitianMatrix sample_gue(int n, rng::Stream& stream);
HermitianMatrix sample_goe(int n, rng::Stream& stream);
HermitianMatrix sample_rp(int n, double lambda, rng::Stream& stream);
HermitianMatrix sample_goe_to_gue(int n, double xi, rng::Stream& stream);

// alpha_N of the RP Hamiltonian.
double rp_coupling(int n, double lambda);

// Matrix of realization `index` of the ensemble.
HermitianMatrix sample_matrix(const EnsembleSpec& spec, std::uint64_t index);

// Ascending eigenvalues.
std::vector<double> eigenvalues(const HermitianMatrix& h);
struct Eigensystem {
  std::vector<double> values;
  // Orthonormal eigenvectors in the columns; vec_im is empty when the
  // matrix is real.
  Eigen::MatrixXd vec_re;
  Eigen::MatrixXd vec_im;
};
Eigensystem eigensystem(const HermitianMatrix& h);

std::vector<double> sample_spectrum(const EnsembleSpec& spec, std::uint64_t index);
// All realizations, computed in parallel; result order is index order.
std::vector<std::vector<double>> sample_spectra(const EnsembleSpec& spec);

}  // namespace rmtlab::ensembles
