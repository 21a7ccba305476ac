#pragma once

#include <vector>

#include <Eigen/Dense>

namespace rmtlab::lapack {

// Symmetric eigenproblem (dsyevd). Eigenvalues ascending into w;
// eigenvectors into *vec when requested.
void syevd(bool vectors, const Eigen::MatrixXd& a, std::vector<double>& w, Eigen::MatrixXd* vec);

// Hermitian eigenproblem (zheevd) on a = re + i im.
void heevd(bool vectors, const Eigen::MatrixXd& re, const Eigen::MatrixXd& im, std::vector<double>& w,
           Eigen::MatrixXd* vec_re, Eigen::MatrixXd* vec_im);

}  // namespace rmtlab::lapack
