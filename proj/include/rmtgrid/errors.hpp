#pragma once

#include <stdexcept>
#include <string>

namespace rmtgrid {

// Problems with inputs: malformed files, bad shapes, inconsistent
// configuration. CLI maps these to exit code 2.
struct InputError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Numeric-domain problems: test function evaluated outside its domain,
// rank-deficient designs, quadrature that fails to converge. CLI maps
// these to exit code 3.
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace rmtgrid
