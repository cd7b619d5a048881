#pragma once

#include <stdexcept>
#include <string>

namespace tsentinel {

/// Raised for every contract violation the library detects: malformed
/// input, invalid parameters, dimension mismatches.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace tsentinel
