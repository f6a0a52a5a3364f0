#ifndef FRACHEAT_COMMON_HPP
#define FRACHEAT_COMMON_HPP

#include <cmath>
#include <complex>
#include <cstdint>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace fracheat {

using complex = std::complex<double>;

inline constexpr double pi = 3.14159265358979323846;

class Error : public std::runtime_error {
public:
  explicit Error(const std::string &msg) : std::runtime_error(msg) {}
};

template <typename... Args>
[[noreturn]] void fail(Args &&...args) {
  std::ostringstream os;
  (os << ... << args);
  throw Error(os.str());
}

template <typename... Args>
void require(bool cond, Args &&...args) {
  if (!cond) fail(std::forward<Args>(args)...);
}

inline bool finite(double x) { return std::isfinite(x); }

// Least-squares slope of y against x.
inline double fit_slope(const std::vector<double> &x, const std::vector<double> &y) {
  if (x.size() != y.size() || x.size() < 2) fail("fit_slope: need >= 2 points");
  double n = double(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  double denom = n * sxx - sx * sx;
  if (denom == 0) fail("fit_slope: degenerate abscissae");
  return (n * sxy - sx * sy) / denom;
}

inline double log2_safe(double v) {
  if (v <= 0) fail("log2 of non-positive value ", v);
  return std::log2(v);
}

} // namespace fracheat

#endif
