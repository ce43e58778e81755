#ifndef FSM_ERRORS_HPP_
#define FSM_ERRORS_HPP_

#include <cstdint>
#include <stdexcept>
#include <string>

namespace fsm {

// Base for numerical failures (CLI exit code 3).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A finite section (or normal-equation matrix) is numerically singular.
class SingularSection : public NumericalError {
 public:
  SingularSection(std::int64_t n, double pivot, double scale)
      : NumericalError("singular section at n=" + std::to_string(n) +
                       " (pivot " + std::to_string(pivot) + ", scale " +
                       std::to_string(scale) + ")"),
        n_(n),
        pivot_(pivot) {}
  std::int64_t n() const { return n_; }
  double pivot() const { return pivot_; }

 private:
  std::int64_t n_;
  double pivot_;
};

// An infinite tail sum diverges, e.g. l^p_m is not contained in l^q_w.
class EmbeddingError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

// The model does not satisfy the preconditions of the requested pipeline.
class ModelRejected : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

// Reference solution did not stabilize in a convergence study.
class StudyAborted : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

// Malformed configuration or arguments (CLI exit code 2).
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

}  // namespace fsm

#endif  // FSM_ERRORS_HPP_
