#pragma once

#include <array>
#include <cmath>

namespace fqf {

struct Vec3 {
  double x = 0.0, y = 0.0, z = 0.0;

  double& operator[](int i) { return (&x)[i]; }
  double operator[](int i) const { return (&x)[i]; }

  Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
  Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
  Vec3 operator-() const { return {-x, -y, -z}; }
  Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
  Vec3 operator/(double s) const { return {x / s, y / s, z / s}; }
  Vec3& operator+=(const Vec3& o) {
    x += o.x;
    y += o.y;
    z += o.z;
    return *this;
  }
  Vec3& operator-=(const Vec3& o) {
    x -= o.x;
    y -= o.y;
    z -= o.z;
    return *this;
  }
  Vec3& operator*=(double s) {
    x *= s;
    y *= s;
    z *= s;
    return *this;
  }
};

inline Vec3 operator*(double s, const Vec3& v) { return v * s; }

inline double dot(const Vec3& a, const Vec3& b) { return a.x * b.x + a.y * b.y + a.z * b.z; }

inline Vec3 cross(const Vec3& a, const Vec3& b) {
  return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}

inline double norm(const Vec3& v) { return std::sqrt(dot(v, v)); }

inline Vec3 normalized(const Vec3& v) {
  double n = norm(v);
  return n > 0.0 ? v / n : Vec3{0.0, 0.0, 0.0};
}

// Column-major 3x3 matrix: col(j) is the image of basis vector j.
struct Mat3 {
  std::array<double, 9> m{1, 0, 0, 0, 1, 0, 0, 0, 1};

  double& operator()(int r, int c) { return m[3 * c + r]; }
  double operator()(int r, int c) const { return m[3 * c + r]; }

  Vec3 col(int j) const { return {m[3 * j], m[3 * j + 1], m[3 * j + 2]}; }

  Vec3 operator*(const Vec3& v) const {
    return {m[0] * v.x + m[3] * v.y + m[6] * v.z, m[1] * v.x + m[4] * v.y + m[7] * v.z,
            m[2] * v.x + m[5] * v.y + m[8] * v.z};
  }

  Mat3 operator*(const Mat3& o) const {
    Mat3 r;
    for (int c = 0; c < 3; ++c)
      for (int rr = 0; rr < 3; ++rr) {
        r(rr, c) = (*this)(rr, 0) * o(0, c) + (*this)(rr, 1) * o(1, c) + (*this)(rr, 2) * o(2, c);
      }
    return r;
  }

  Mat3 transposed() const {
    Mat3 r;
    for (int c = 0; c < 3; ++c)
      for (int rr = 0; rr < 3; ++rr) r(rr, c) = (*this)(c, rr);
    return r;
  }
};

// Rodrigues rotation about a unit axis, angle in radians.
Mat3 rotation_about(const Vec3& axis, double angle);

// Largest absolute entry of R^T R - I; zero for an exact rotation.
double orthonormality_defect(const Mat3& r);

// Rigid placement. Orientation columns are the local right / up / heading axes.
struct Pose3 {
  Vec3 position{};
  Mat3 orientation{};

  Vec3 right() const { return orientation.col(0); }
  Vec3 up() const { return orientation.col(1); }
  Vec3 heading() const { return orientation.col(2); }

  // Rotations about the pose's own axes (intrinsic).
  void yaw(double angle) { orientation = orientation * rotation_about({0, 1, 0}, angle); }
  void pitch(double angle) { orientation = orientation * rotation_about({1, 0, 0}, angle); }
  void roll(double angle) { orientation = orientation * rotation_about({0, 0, 1}, angle); }

  void advance(double dist) { position += heading() * dist; }
};

}  // namespace fqf
