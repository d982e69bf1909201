#ifndef MORE3D_ERRORS_HPP_
#define MORE3D_ERRORS_HPP_

#include <stdexcept>
#include <string>

namespace more3d {

// Error taxonomy shared by the library and the CLI exit-code mapping:
//   UsageError   -> exit 1 (bad flags, bad config keys, nonsense requests)
//   DataError    -> exit 2 (malformed or inconsistent input files / samples)
//   RuntimeFault -> exit 3 (violated runtime contracts: shape mismatches,
//                           non-finite values, transport failures)
struct UsageError : std::runtime_error {
  explicit UsageError(const std::string& msg) : std::runtime_error(msg) {}
};

struct DataError : std::runtime_error {
  explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

struct RuntimeFault : std::runtime_error {
  explicit RuntimeFault(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace more3d

#endif  // MORE3D_ERRORS_HPP_
