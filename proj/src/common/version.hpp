#pragma once

namespace rmtlab {

inline constexpr const char* kVersion = "1.0.0";
inline constexpr const char* kModules[] = {"ensembles", "reference-billiards", "unfolding", "observables",
                                           "rp-analytics", "scattering", "inference", "cli-io"};

}  // namespace rmtlab
