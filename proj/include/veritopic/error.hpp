#pragma once

#include <stdexcept>
#include <string>

namespace veritopic {

// Raised for malformed inputs: bad files, schema violations, inconsistent data.
// The CLI maps this to exit code 2.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace veritopic
