#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <string>

namespace rfgn {

// All numerics run in double precision; the equivalence and reset guarantees
// of this library are stated at 1e-9/1e-12 absolute and do not hold in float.
using Real = double;
using EntityId = std::int32_t;
using RelationId = std::int32_t;

// Row-major so that a node's state is a contiguous row.
using Matrix = Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::Matrix<Real, Eigen::Dynamic, 1>;

using RowRef = Eigen::Ref<Eigen::Matrix<Real, 1, Eigen::Dynamic>>;
using ConstRowRef = Eigen::Ref<const Eigen::Matrix<Real, 1, Eigen::Dynamic>>;
using ConstVectorRef = Eigen::Ref<const Vector>;

/// Malformed input files, inconsistent configuration, contract violations.
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// Non-finite values where finite ones are required (training aborts).
struct NumericError : std::runtime_error {
  explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace rfgn
