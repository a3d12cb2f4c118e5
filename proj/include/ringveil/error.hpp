#ifndef RINGVEIL_ERROR_HPP
#define RINGVEIL_ERROR_HPP

#include <stdexcept>
#include <string>

namespace ringveil {

// Base class for every error thrown by this library.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ParamError : Error { using Error::Error; };        // parameter / prime generation
struct DomainError : Error { using Error::Error; };       // argument outside its domain
struct CryptoError : Error { using Error::Error; };       // primitive failure (not tampering)
struct TamperError : Error { using Error::Error; };       // authentication failure
struct FramingError : Error { using Error::Error; };      // malformed wire bytes
struct ScheduleError : Error { using Error::Error; };     // schedule invariant violation
struct RegistryError : Error { using Error::Error; };     // unknown device / missing key
struct PosetError : Error { using Error::Error; };        // precedence relation not a poset
struct SizeError : Error { using Error::Error; };         // enumeration bound exceeded
struct InfeasibleError : Error { using Error::Error; };   // delay constraints unsatisfiable
struct CapacityError : Error { using Error::Error; };     // payload exceeds a fixed field
struct ProtocolError : Error { using Error::Error; };     // action outside protocol state
struct LedgerError : Error { using Error::Error; };       // pad ledger entry missing
struct ConfigError : Error { using Error::Error; };       // bad simulation / CLI config
struct PartitionError : Error { using Error::Error; };    // ring partition infeasible
struct IncompleteRunError : Error { using Error::Error; };// execution log missing records
struct ComparisonError : Error { using Error::Error; };   // traces not comparable

} // namespace ringveil

#endif
