#pragma once

#include <stdexcept>
#include <string>

namespace turb {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// zeta outside (0, zeta_crit)
struct ZetaOutOfRange : Error { using Error::Error; };
// iterative solve missed its residual budget
struct ConvergenceFailure : Error { using Error::Error; };
// evaluation outside a function's mathematical domain
struct DomainError : Error { using Error::Error; };
// (x,t) outside a provider's data domain with clamping disabled
struct OutOfDomain : Error { using Error::Error; };
// k, eps or nu <= 0 in input data
struct NonPositiveField : Error { using Error::Error; };
// Reynolds tensor incompatible with the anisotropy construction
struct NotRealizable : Error { using Error::Error; };
// operation invoked on the wrong realization variant
struct VariantMismatch : Error { using Error::Error; };
// local sigma_z(x,t)*z at or beyond the spectrum's critical value
struct UnsolvableZeta : Error { using Error::Error; };
// Lagrangian correlogram has not decayed below noise level at the horizon
struct HorizonTooShort : Error { using Error::Error; };
// malformed input file or configuration
struct ParseError : Error { using Error::Error; };

}  // namespace turb
