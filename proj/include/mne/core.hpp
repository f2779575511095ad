#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace mne {

using Vector = Eigen::VectorXd;
// Point sets are stored one point per row.
using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;

// Membership tolerance for manifold points and the algebraic tolerance used
// for simplex sums. Fixed so test outcomes are reproducible.
inline constexpr double kMembershipTol = 1e-9;
inline constexpr double kAlgebraicTol = 1e-12;

// Raised when a loss, gradient or weight becomes NaN/Inf. The run loop fills in
// the iteration; steps called directly leave it at -1.
class NumericalAbort : public std::runtime_error {
 public:
  NumericalAbort(const std::string& what, std::int64_t iteration = -1)
      : std::runtime_error(iteration >= 0 ? what + " at iteration " + std::to_string(iteration)
                                          : what),
        detail_(what),
        iteration_(iteration) {}

  std::int64_t iteration() const { return iteration_; }
  const std::string& detail() const { return detail_; }

  NumericalAbort at_iteration(std::int64_t iteration) const { return {detail_, iteration}; }

 private:
  std::string detail_;
  std::int64_t iteration_;
};

}  // namespace mne
