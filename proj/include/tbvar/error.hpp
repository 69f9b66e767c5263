#pragma once

#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace tbvar {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// Loss of positive-definiteness, failed factorization or SVD, non-finite iterates.
class NumericalBreakdown : public Error {
 public:
  using Error::Error;
};

/// Input too degenerate to produce a result (e.g. repeated redraws all nilpotent).
class DegenerateInput : public Error {
 public:
  using Error::Error;
};

/// A Gram/covariance block needed for a test or projection is singular.
class RankDeficiency : public Error {
 public:
  RankDeficiency(std::string block, const std::string& what)
      : Error(what + " (block: " + block + ")"), block_(std::move(block)) {}
  const std::string& block() const noexcept { return block_; }

 private:
  std::string block_;
};

/// Iteration cap reached before the stopping rule fired. Carries the last iterate
/// (vectors are stored as a single column).
class ConvergenceFailure : public Error {
 public:
  ConvergenceFailure(const std::string& what, Eigen::MatrixXd last_iterate)
      : Error(what), last_iterate_(std::move(last_iterate)) {}
  const Eigen::MatrixXd& last_iterate() const noexcept { return last_iterate_; }

 private:
  Eigen::MatrixXd last_iterate_;
};

}  // namespace tbvar
