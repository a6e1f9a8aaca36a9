#pragma once

#include <cmath>
#include <cstdint>
#include <ostream>

namespace pcc {

//============================================================================
// Small fixed-size vector used for positions, colors and normals.

template<typename T>
struct Vec3 {
  T x{}, y{}, z{};

  Vec3() = default;
  constexpr Vec3(T x_, T y_, T z_) : x(x_), y(y_), z(z_) {}

  T& operator[](int i) { return i == 0 ? x : i == 1 ? y : z; }
  const T& operator[](int i) const { return i == 0 ? x : i == 1 ? y : z; }

  Vec3 operator+(const Vec3& o) const { return {T(x + o.x), T(y + o.y), T(z + o.z)}; }
  Vec3 operator-(const Vec3& o) const { return {T(x - o.x), T(y - o.y), T(z - o.z)}; }
  Vec3 operator*(T s) const { return {T(x * s), T(y * s), T(z * s)}; }
  Vec3 operator/(T s) const { return {T(x / s), T(y / s), T(z / s)}; }

  Vec3& operator+=(const Vec3& o) { x += o.x; y += o.y; z += o.z; return *this; }
  Vec3& operator-=(const Vec3& o) { x -= o.x; y -= o.y; z -= o.z; return *this; }

  bool operator==(const Vec3& o) const { return x == o.x && y == o.y && z == o.z; }
  bool operator!=(const Vec3& o) const { return !(*this == o); }
  bool operator<(const Vec3& o) const {
    if (x != o.x) return x < o.x;
    if (y != o.y) return y < o.y;
    return z < o.z;
  }

  T dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }
  double norm2() const { return double(x) * x + double(y) * y + double(z) * z; }
  double norm() const { return std::sqrt(norm2()); }
  T maxComponent() const { return std::max(x, std::max(y, z)); }

  template<typename U>
  Vec3<U> cast() const { return {U(x), U(y), U(z)}; }
};

template<typename T>
inline std::ostream& operator<<(std::ostream& os, const Vec3<T>& v) {
  return os << '(' << v.x << ' ' << v.y << ' ' << v.z << ')';
}

using Vec3d = Vec3<double>;
using Vec3i = Vec3<int64_t>;
using Vec3u8 = Vec3<uint8_t>;

}  // namespace pcc
