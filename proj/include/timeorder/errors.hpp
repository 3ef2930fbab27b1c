#pragma once

#include <stdexcept>
#include <string>

namespace timeorder {

// Base of every error the library throws.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct InvalidParameter : Error { using Error::Error; };
struct ValidationError : Error { using Error::Error; };
struct ParseError : Error { using Error::Error; };
struct GridMismatch : Error { using Error::Error; };
struct ShapeMismatch : Error { using Error::Error; };
struct ParityViolation : Error { using Error::Error; };
struct NumericalInstability : Error { using Error::Error; };
struct LogBranchFailure : Error { using Error::Error; };
struct NonFiniteIntegrand : Error { using Error::Error; };
struct IOError : Error { using Error::Error; };
struct MalformedCSV : Error { using Error::Error; };

} // namespace timeorder
