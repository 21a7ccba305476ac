#pragma once

#include <cmath>
#include <random>
#include <vector>

#include "common/rng.hpp"
#include "ensembles/ensembles.hpp"
#include "unfolding/unfolding.hpp"

namespace testing_helpers {

// Levels with i.i.d. unit-mean exponential spacings.
inline std::vector<double> poisson_levels(std::size_t n, std::uint64_t seed) {
  rmtlab::rng::Stream s(seed, 0, rmtlab::rng::Purpose::Synthetic);
  std::exponential_distribution<double> e(1.0);
  std::vector<double> x(n);
  double acc = 0.0;
  for (auto& v : x) v = (acc += e(s));
  return x;
}

inline rmtlab::unfolding::UnfoldedSpectrum as_unfolded(std::vector<double> eps) {
  rmtlab::unfolding::UnfoldedSpectrum u;
  u.epsilons = std::move(eps);
  u.method = rmtlab::unfolding::Method::Analytic;
  return u;
}

inline std::vector<rmtlab::unfolding::UnfoldedSpectrum> poisson_ensemble(int count, std::size_t n, std::uint64_t seed) {
  std::vector<rmtlab::unfolding::UnfoldedSpectrum> e;
  for (int i = 0; i < count; ++i) e.push_back(as_unfolded(poisson_levels(n, seed * 1000 + i)));
  return e;
}

inline std::vector<rmtlab::unfolding::UnfoldedSpectrum> matrix_ensemble(rmtlab::ensembles::EnsembleKind kind,
                                                                        int count, int dim, std::uint64_t seed,
                                                                        double lambda = 0.0, double xi = 0.0) {
  rmtlab::ensembles::EnsembleSpec spec;
  spec.kind = kind;
  spec.dim = dim;
  spec.realizations = count;
  spec.master_seed = seed;
  spec.lambda = lambda;
  spec.xi = xi;
  std::vector<rmtlab::unfolding::RawSpectrum> raws;
  for (auto& v : rmtlab::ensembles::sample_spectra(spec))
    raws.push_back({std::move(v), rmtlab::unfolding::Source::Matrix, ""});
  return rmtlab::unfolding::unfold_ensemble(raws);
}

}  // namespace testing_helpers
