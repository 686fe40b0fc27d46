#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace nsl {

/// Planar point / vector. Used both for coordinates and for
/// piecewise-constant vector data (gradients, fluxes).
struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  Vec2& operator+=(const Vec2& o) { x += o.x; y += o.y; return *this; }
  Vec2& operator-=(const Vec2& o) { x -= o.x; y -= o.y; return *this; }
  Vec2& operator*=(double s) { x *= s; y *= s; return *this; }
  friend Vec2 operator+(Vec2 a, const Vec2& b) { return a += b; }
  friend Vec2 operator-(Vec2 a, const Vec2& b) { return a -= b; }
  friend Vec2 operator*(double s, Vec2 a) { return a *= s; }
  friend Vec2 operator*(Vec2 a, double s) { return a *= s; }
  friend bool operator==(const Vec2&, const Vec2&) = default;
};

using Point = Vec2;

inline double dot(const Vec2& a, const Vec2& b) { return a.x * b.x + a.y * b.y; }
inline double cross(const Vec2& a, const Vec2& b) { return a.x * b.y - a.y * b.x; }
inline double norm(const Vec2& a) { return std::hypot(a.x, a.y); }
inline double distance(const Point& a, const Point& b) { return norm(a - b); }

/// Counterclockwise quarter turn R(a,b) = (-b,a).
inline Vec2 rotate90(const Vec2& v) { return {-v.y, v.x}; }

using ScalarFunction = std::function<double(const Point&)>;

/// Raised for malformed input data or violated preconditions that are
/// not plain argument errors (kept distinct so the CLI can map exit codes).
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Nonlinear iteration failed to meet its tolerance.
class ConvergenceError : public std::runtime_error {
 public:
  ConvergenceError(const std::string& what, std::vector<double> trace)
      : std::runtime_error(what), trace_(std::move(trace)) {}
  const std::vector<double>& trace() const { return trace_; }

 private:
  std::vector<double> trace_;
};

/// Deterministic per-task seed from (seed, task name, index).
std::uint64_t derive_seed(std::uint64_t seed, std::string_view task, std::uint64_t index);

/// Worker count: NSL_WORKERS if set (>= 1), otherwise hardware concurrency.
int worker_count();

/// Runs body(i) for i in [0, count) on up to worker_count() threads.
/// Exceptions are rethrown (lowest index first) after all workers join.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body);

/// Shortest round-trip decimal representation, stable across runs.
std::string format_real(double value);

}  // namespace nsl
