#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <queue>
#include <string>
#include <vector>

#include "common/error.hpp"

namespace rmtlab::quad {

struct Result {
  double value = 0.0;
  double error = 0.0;
  bool converged = true;
};

namespace detail {

// 7-point Gauss / 15-point Kronrod nodes on [-1, 1].
inline constexpr double kXgk[8] = {0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
                                   0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
                                   0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
                                   0.207784955007898467600689403773245, 0.0};
inline constexpr double kWgk[8] = {0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
                                   0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
                                   0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
                                   0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
inline constexpr double kWg[4] = {0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
                                  0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Segment {
  double a, b, value, error;
  unsigned depth;
  bool operator<(const Segment& o) const { return error < o.error; }
};

template <class F>
Segment gk15(F& f, double a, double b, unsigned depth) {
  const double c = 0.5 * (a + b);
  const double h = 0.5 * (b - a);
  const double fc = f(c);
  double rk = fc * kWgk[7];
  double rg = fc * kWg[3];
  for (int j = 0; j < 7; ++j) {
    const double dx = h * kXgk[j];
    const double s = f(c - dx) + f(c + dx);
    rk += kWgk[j] * s;
    if (j % 2 == 1) rg += kWg[j / 2] * s;
  }
  return {a, b, rk * h, std::fabs((rk - rg) * h), depth};
}

template <class F>
Result adaptive(F& f, double a, double b, double abs_tol, double rel_tol, unsigned max_depth) {
  constexpr std::size_t kMaxSegments = 5000;
  std::priority_queue<Segment> open;
  std::vector<Segment> done;
  open.push(gk15(f, a, b, 0));
  double total = open.top().value;
  double err = open.top().error;
  while (!open.empty() && err > std::max(abs_tol, rel_tol * std::fabs(total))) {
    Segment s = open.top();
    open.pop();
    if (s.depth >= max_depth || open.size() + done.size() >= kMaxSegments) {
      done.push_back(s);
      continue;
    }
    const double mid = 0.5 * (s.a + s.b);
    Segment l = gk15(f, s.a, mid, s.depth + 1);
    Segment r = gk15(f, mid, s.b, s.depth + 1);
    total += l.value + r.value - s.value;
    err += l.error + r.error - s.error;
    open.push(l);
    open.push(r);
  }
  double v = 0.0;
  double e = 0.0;
  for (const Segment& s : done) v += s.value, e += s.error;
  for (; !open.empty(); open.pop()) v += open.top().value, e += open.top().error;
  return {v, e, e <= std::max(abs_tol, rel_tol * std::fabs(v))};
}

}  // namespace detail

// Globally adaptive 15-point Gauss-Kronrod on [a, b]. Throws Numeric
// when the summed error estimate stays above max(abs_tol, rel_tol*|I|)
// once every open segment has reached max_depth bisections.
template <class F>
Result integrate(F&& f, double a, double b, double abs_tol, double rel_tol = 1e-10, unsigned max_depth = 30,
                 const char* what = "integral") {
  if (a == b) return {};
  Result r = detail::adaptive(f, a, b, abs_tol, rel_tol, max_depth);
  if (!std::isfinite(r.value)) fail(ErrorCode::Numeric, std::string(what) + ": non-finite quadrature result");
  if (!r.converged) {
    char buf[256];
    std::snprintf(buf, sizeof buf, "%s: quadrature did not converge on [%.6g, %.6g], error estimate %.3e", what, a, b,
                  r.error);
    fail(ErrorCode::Numeric, buf);
  }
  return r;
}

// Same, but an unconverged estimate is returned instead of thrown.
template <class F>
Result integrate_lenient(F&& f, double a, double b, double rel_tol = 1e-10, unsigned max_depth = 30) {
  if (a == b) return {};
  return detail::adaptive(f, a, b, 0.0, rel_tol, max_depth);
}

}  // namespace rmtlab::quad
