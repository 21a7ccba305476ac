#include "ensembles/ensembles.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "common/error.hpp"
#include "common/parallel.hpp"
#include "common/lapack.hpp"

namespace rmtlab::ensembles {

namespace {

void check_dim(int n, const char* what) {
  require(n >= 2, ErrorCode::InvalidArgument, std::string(what) + ": dimension must be at least 2, got " +
                                                  std::to_string(n));
}

// GOE block: diagonal variance 1/(2n), off-diagonal 1/(4n).
Eigen::MatrixXd goe_block(int n, rng::Stream& stream) {
  std::normal_distribution<double> gauss;
  const double sd_diag = std::sqrt(1.0 / (2.0 * n));
  const double sd_off = std::sqrt(1.0 / (4.0 * n));
  Eigen::MatrixXd m(n, n);
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < j; ++i) {
      double v = sd_off * gauss(stream);
      m(i, j) = v;
      m(j, i) = v;
    }
    m(j, j) = sd_diag * gauss(stream);
  }
  return m;
}

// Real antisymmetric block with off-diagonal variance 1/(4n).
Eigen::MatrixXd antisymmetric_block(int n, rng::Stream& stream) {
  std::normal_distribution<double> gauss;
  const double sd_off = std::sqrt(1.0 / (4.0 * n));
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < j; ++i) {
      double v = sd_off * gauss(stream);
      m(i, j) = v;
      m(j, i) = -v;
    }
  return m;
}

}  // namespace

const char* kind_name(EnsembleKind k) {
  switch (k) {
    case EnsembleKind::Poisson: return "poisson";
    case EnsembleKind::GOE: return "goe";
    case EnsembleKind::GUE: return "gue";
    case EnsembleKind::RpPoissonToGue: return "rp";
    case EnsembleKind::GoeToGue: return "goe2gue";
  }
  return "unknown";
}

EnsembleKind parse_kind(const std::string& name) {
  if (name == "poisson") return EnsembleKind::Poisson;
  if (name == "goe") return EnsembleKind::GOE;
  if (name == "gue") return EnsembleKind::GUE;
  if (name == "rp") return EnsembleKind::RpPoissonToGue;
  if (name == "goe2gue") return EnsembleKind::GoeToGue;
  fail(ErrorCode::InvalidArgument, "unknown ensemble kind '" + name + "'");
}

void EnsembleSpec::validate() const {
  check_dim(dim, "EnsembleSpec");
  require(realizations >= 1, ErrorCode::InvalidArgument, "EnsembleSpec: realizations must be positive");
  require(std::isfinite(lambda) && lambda >= 0.0, ErrorCode::InvalidArgument,
          "EnsembleSpec: lambda must be nonnegative");
  require(std::isfinite(xi) && xi >= 0.0, ErrorCode::InvalidArgument, "EnsembleSpec: xi must be nonnegative");
  if (kind != EnsembleKind::RpPoissonToGue)
    require(lambda == 0.0, ErrorCode::InvalidArgument, std::string("EnsembleSpec: lambda is not used by kind ") +
                                                           kind_name(kind));
  if (kind != EnsembleKind::GoeToGue)
    require(xi == 0.0, ErrorCode::InvalidArgument, std::string("EnsembleSpec: xi is not used by kind ") +
                                                       kind_name(kind));
}

HermitianMatrix HermitianMatrix::from_real(Eigen::MatrixXd re, double tol) {
  require(re.rows() == re.cols(), ErrorCode::InvalidArgument, "HermitianMatrix: matrix must be square");
  HermitianMatrix h;
  h.re_ = std::move(re);
  require(h.hermiticity_defect() <= tol, ErrorCode::InvalidArgument, "HermitianMatrix: input is not symmetric");
  return h;
}

HermitianMatrix HermitianMatrix::from_parts(Eigen::MatrixXd re, Eigen::MatrixXd im, double tol) {
  require(re.rows() == re.cols() && im.rows() == re.rows() && im.cols() == re.cols(), ErrorCode::InvalidArgument,
          "HermitianMatrix: real and imaginary parts must be square and of equal size");
  HermitianMatrix h;
  h.re_ = std::move(re);
  h.im_ = std::move(im);
  require(h.hermiticity_defect() <= tol, ErrorCode::InvalidArgument, "HermitianMatrix: input is not Hermitian");
  return h;
}

HermitianMatrix HermitianMatrix::from_complex(const Eigen::MatrixXcd& m, double tol) {
  return from_parts(m.real(), m.imag(), tol);
}

Eigen::MatrixXcd HermitianMatrix::dense() const {
  if (is_real()) return re_.cast<std::complex<double>>();
  Eigen::MatrixXcd m(re_.rows(), re_.cols());
  m.real() = re_;
  m.imag() = im_;
  return m;
}

double HermitianMatrix::hermiticity_defect() const {
  double d = (re_ - re_.transpose()).cwiseAbs().maxCoeff();
  if (!is_real()) d = std::max(d, (im_ + im_.transpose()).cwiseAbs().maxCoeff());
  return d;
}

HermitianMatrix sample_goe(int n, rng::Stream& stream) {
  check_dim(n, "sample_goe");
  return HermitianMatrix::from_real(goe_block(n, stream), 0.0);
}

HermitianMatrix sample_gue(int n, rng::Stream& stream) {
  check_dim(n, "sample_gue");
  std::normal_distribution<double> gauss;
  const double sd_diag = std::sqrt(1.0 / (2.0 * n));
  const double sd_off = std::sqrt(1.0 / (4.0 * n));
  Eigen::MatrixXd re(n, n);
  Eigen::MatrixXd im(n, n);
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < j; ++i) {
      double a = sd_off * gauss(stream);
      double b = sd_off * gauss(stream);
      re(i, j) = a;
      re(j, i) = a;
      im(i, j) = b;
      im(j, i) = -b;
    }
    re(j, j) = sd_diag * gauss(stream);
    im(j, j) = 0.0;
  }
  return HermitianMatrix::from_parts(std::move(re), std::move(im), 0.0);
}

double rp_coupling(int n, double lambda) { return lambda * 2.0 * M_PI / n; }

HermitianMatrix sample_rp(int n, double lambda, rng::Stream& stream) {
  check_dim(n, "sample_rp");
  require(std::isfinite(lambda) && lambda >= 0.0, ErrorCode::InvalidArgument,
          "sample_rp: lambda must be nonnegative");
  std::normal_distribution<double> gauss;
  const double sd = std::sqrt(1.0 / (2.0 * n));
  Eigen::VectorXd h0(n);
  for (int i = 0; i < n; ++i) h0(i) = sd * gauss(stream);
  if (lambda == 0.0) {
    Eigen::MatrixXd m = h0.asDiagonal();
    return HermitianMatrix::from_real(std::move(m), 0.0);
  }
  HermitianMatrix g = sample_gue(n, stream);
  const double a = rp_coupling(n, lambda);
  Eigen::MatrixXd re = a * g.re();
  re.diagonal() += h0;
  Eigen::MatrixXd im = a * g.im();
  return HermitianMatrix::from_parts(std::move(re), std::move(im), 0.0);
}

HermitianMatrix sample_goe_to_gue(int n, double xi, rng::Stream& stream) {
  check_dim(n, "sample_goe_to_gue");
  require(std::isfinite(xi) && xi >= 0.0, ErrorCode::InvalidArgument, "sample_goe_to_gue: xi must be nonnegative");
  Eigen::MatrixXd hs = goe_block(n, stream);
  // Drawn at xi = 0 too, so a fixed stream gives coupled matrices across xi.
  Eigen::MatrixXd ha = antisymmetric_block(n, stream);
  if (xi == 0.0) return HermitianMatrix::from_real(std::move(hs), 0.0);
  Eigen::MatrixXd im = (xi * M_PI / std::sqrt(static_cast<double>(n))) * ha;
  return HermitianMatrix::from_parts(std::move(hs), std::move(im), 0.0);
}

HermitianMatrix sample_matrix(const EnsembleSpec& spec, std::uint64_t index) {
  rng::Stream stream(spec.master_seed, index, rng::Purpose::Matrix);
  switch (spec.kind) {
    case EnsembleKind::Poisson: return sample_rp(spec.dim, 0.0, stream);
    case EnsembleKind::GOE: return sample_goe(spec.dim, stream);
    case EnsembleKind::GUE: return sample_gue(spec.dim, stream);
    case EnsembleKind::RpPoissonToGue: return sample_rp(spec.dim, spec.lambda, stream);
    case EnsembleKind::GoeToGue: return sample_goe_to_gue(spec.dim, spec.xi, stream);
  }
  fail(ErrorCode::Internal, "sample_matrix: unhandled kind");
}

namespace {

bool is_diagonal(const HermitianMatrix& h) {
  const Eigen::MatrixXd& re = h.re();
  const int n = h.dim();
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i)
      if (i != j && (re(i, j) != 0.0 || (!h.is_real() && h.im()(i, j) != 0.0))) return false;
  return true;
}

}  // namespace

std::vector<double> eigenvalues(const HermitianMatrix& h) {
  require(h.dim() >= 1, ErrorCode::InvalidArgument, "eigenvalues: empty matrix");
  require(h.hermiticity_defect() <= 1e-12, ErrorCode::InvalidArgument,
          "eigenvalues: matrix is not Hermitian within 1e-12");
  const int n = h.dim();
  std::vector<double> w(n);
  if (is_diagonal(h)) {
    for (int i = 0; i < n; ++i) w[i] = h.re()(i, i);
    std::sort(w.begin(), w.end());
    return w;
  }
  if (h.is_real())
    lapack::syevd(false, h.re(), w, nullptr);
  else
    lapack::heevd(false, h.re(), h.im(), w, nullptr, nullptr);
  return w;
}

Eigensystem eigensystem(const HermitianMatrix& h) {
  require(h.hermiticity_defect() <= 1e-12, ErrorCode::InvalidArgument,
          "eigensystem: matrix is not Hermitian within 1e-12");
  Eigensystem es;
  es.values.resize(h.dim());
  if (h.is_real())
    lapack::syevd(true, h.re(), es.values, &es.vec_re);
  else
    lapack::heevd(true, h.re(), h.im(), es.values, &es.vec_re, &es.vec_im);
  return es;
}

std::vector<double> sample_spectrum(const EnsembleSpec& spec, std::uint64_t index) {
  return eigenvalues(sample_matrix(spec, index));
}

std::vector<std::vector<double>> sample_spectra(const EnsembleSpec& spec) {
  spec.validate();
  std::vector<std::vector<double>> out(spec.realizations);
  parallel_for(out.size(), [&](std::size_t i) { out[i] = sample_spectrum(spec, i); });
  return out;
}

}  // namespace rmtlab::ensembles
