#pragma once

#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace acrkn {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Dense row-major tensor of 64-bit floats. Rank 1 and 2 cover everything
/// this library needs; higher ranks are representable but unused.
struct Tensor {
  std::vector<std::size_t> shape;
  std::vector<double> v;

  Tensor() = default;
  Tensor(std::vector<std::size_t> s, std::vector<double> data)
      : shape(std::move(s)), v(std::move(data)) {
    if (v.size() != shape_count(shape)) {
      throw Error("tensor: value count " + std::to_string(v.size()) +
                  " does not match shape " + shape_str(shape));
    }
  }

  static std::size_t shape_count(const std::vector<std::size_t>& s) {
    std::size_t n = 1;
    for (std::size_t e : s) n *= e;
    return n;
  }

  static Tensor zeros(std::vector<std::size_t> s) {
    std::size_t n = shape_count(s);
    return Tensor(std::move(s), std::vector<double>(n, 0.0));
  }
  static Tensor full(std::vector<std::size_t> s, double x) {
    std::size_t n = shape_count(s);
    return Tensor(std::move(s), std::vector<double>(n, x));
  }
  static Tensor scalar(double x) { return Tensor({1}, {x}); }
  static Tensor row(std::vector<double> data) {
    std::size_t n = data.size();
    return Tensor({n}, std::move(data));
  }
  static Tensor matrix(std::size_t r, std::size_t c, std::vector<double> data) {
    return Tensor({r, c}, std::move(data));
  }
  static Tensor identity(std::size_t n) {
    Tensor t = zeros({n, n});
    for (std::size_t i = 0; i < n; ++i) t.v[i * n + i] = 1.0;
    return t;
  }

  std::size_t size() const { return v.size(); }
  std::size_t rank() const { return shape.size(); }
  bool empty() const { return v.empty() && shape.empty(); }

  std::size_t rows() const { return shape.empty() ? 0 : shape[0]; }
  std::size_t cols() const { return rank() < 2 ? 1 : shape[1]; }

  double& at(std::size_t i) { return v[i]; }
  double at(std::size_t i) const { return v[i]; }
  double& at(std::size_t i, std::size_t j) { return v[i * shape[1] + j]; }
  double at(std::size_t i, std::size_t j) const { return v[i * shape[1] + j]; }

  bool all_finite() const {
    for (double x : v) {
      if (!std::isfinite(x)) return false;
    }
    return true;
  }

  static std::string shape_str(const std::vector<std::size_t>& s) {
    std::ostringstream os;
    os << "(";
    for (std::size_t i = 0; i < s.size(); ++i) os << (i ? "," : "") << s[i];
    os << ")";
    return os.str();
  }
  std::string shape_str() const { return shape_str(shape); }
};

inline bool same_shape(const Tensor& a, const Tensor& b) {
  return a.shape == b.shape;
}

}  // namespace acrkn
