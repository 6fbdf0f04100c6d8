#pragma once

#include <Eigen/Core>

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>

namespace mas {

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

using VectorXd = Vector<double>;
using MatrixXd = Matrix<double>;
using Index = Eigen::Index;

/// Thrown when a vector or matrix does not have the length an operator expects.
class DimensionError : public std::invalid_argument {
 public:
  DimensionError(const std::string& what, Index expected, Index actual)
      : std::invalid_argument(what + ": expected length " + std::to_string(expected) +
                              ", got " + std::to_string(actual)),
        expected_(expected),
        actual_(actual) {}

  Index expected() const { return expected_; }
  Index actual() const { return actual_; }

 private:
  Index expected_;
  Index actual_;
};

/// Raised when a mode-wise denominator makes the posterior mean ill-defined.
class InstabilityError : public std::runtime_error {
 public:
  InstabilityError(const std::string& what, Index mode)
      : std::runtime_error(what + " (mode " + std::to_string(mode) + ")"), mode_(mode) {}

  Index mode() const { return mode_; }

 private:
  Index mode_;
};

inline void check_length(const char* what, Index expected, Index actual) {
  if (expected != actual) throw DimensionError(what, expected, actual);
}

struct ImageShape {
  Index channels = 1;
  Index height = 1;
  Index width = 1;

  Index size() const { return channels * height * width; }
  bool operator==(const ImageShape&) const = default;
};

/// Channel-major image: index (c, row, col) -> (c * height + row) * width + col.
template <typename Scalar>
struct ImageTensor {
  Index channels = 1;
  Index height = 1;
  Index width = 1;
  Vector<Scalar> data;

  ImageTensor() = default;
  ImageTensor(Index c, Index h, Index w) : channels(c), height(h), width(w), data(Vector<Scalar>::Zero(c * h * w)) {
    if (c <= 0 || h <= 0 || w <= 0) throw std::invalid_argument("ImageTensor: dimensions must be positive");
  }
  ImageTensor(Index c, Index h, Index w, Vector<Scalar> values)
      : channels(c), height(h), width(w), data(std::move(values)) {
    if (c <= 0 || h <= 0 || w <= 0) throw std::invalid_argument("ImageTensor: dimensions must be positive");
    check_length("ImageTensor", c * h * w, data.size());
    if (!data.allFinite()) throw std::invalid_argument("ImageTensor: non-finite values");
  }

  Index size() const { return channels * height * width; }
  ImageShape shape() const { return {channels, height, width}; }
  Index index(Index c, Index r, Index col) const { return (c * height + r) * width + col; }
  Scalar& operator()(Index c, Index r, Index col) { return data[index(c, r, col)]; }
  Scalar operator()(Index c, Index r, Index col) const { return data[index(c, r, col)]; }

  bool same_shape(const ImageTensor& o) const {
    return channels == o.channels && height == o.height && width == o.width;
  }
};

using Image = ImageTensor<double>;

}  // namespace mas
