#include "common/lapack.hpp"

#include <complex>
#include <string>

#define lapack_complex_float std::complex<float>
#define lapack_complex_double std::complex<double>
#include <lapacke.h>

#include "common/error.hpp"

namespace rmtlab::lapack {

void syevd(bool vectors, const Eigen::MatrixXd& a, std::vector<double>& w, Eigen::MatrixXd* vec) {
  const lapack_int n = static_cast<lapack_int>(a.rows());
  Eigen::MatrixXd work = a;
  w.resize(n);
  lapack_int info = LAPACKE_dsyevd(LAPACK_COL_MAJOR, vectors ? 'V' : 'N', 'U', n, work.data(), n, w.data());
  if (info != 0) fail(ErrorCode::Numeric, "dsyevd failed with info " + std::to_string(info));
  if (vectors && vec) *vec = std::move(work);
}

void heevd(bool vectors, const Eigen::MatrixXd& re, const Eigen::MatrixXd& im, std::vector<double>& w,
           Eigen::MatrixXd* vec_re, Eigen::MatrixXd* vec_im) {
  const lapack_int n = static_cast<lapack_int>(re.rows());
  Eigen::MatrixXcd work(n, n);
  work.real() = re;
  work.imag() = im;
  w.resize(n);
  lapack_int info = LAPACKE_zheevd(LAPACK_COL_MAJOR, vectors ? 'V' : 'N', 'U', n, work.data(), n, w.data());
  if (info != 0) fail(ErrorCode::Numeric, "zheevd failed with info " + std::to_string(info));
  if (vectors) {
    if (vec_re) *vec_re = work.real();
    if (vec_im) *vec_im = work.imag();
  }
}

}  // namespace rmtlab::lapack
