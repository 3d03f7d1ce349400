#pragma once

#include <stdexcept>
#include <string>

namespace gaitnet {

// Error taxonomy mirrors the CLI exit codes: config errors exit 2,
// data/file errors exit 3, numerical divergence exits 4.
struct error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct config_error : error {
  using error::error;
};

struct data_error : error {
  using error::error;
};

struct numeric_error : error {
  using error::error;
};

}  // namespace gaitnet
