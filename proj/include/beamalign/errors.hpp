// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace beamalign {

/// Invalid problem dimensions or malformed configuration.
class InfeasibleConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Water-filling requested over a gain vector with no positive entry.
class AllZeroGainsError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Equivalent channel too close to singular for a zero-forcing outer filter.
class SingularEquivalentChannelError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Whitened matched filter direction vanished (filter input numerically zero).
class ZeroDirectionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Input matrix expected to have orthonormal columns but does not.
class NonOrthonormalError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Persisted file declares a schema version newer than this build understands.
class SchemaVersionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Filesystem failure; message carries the offending path.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace beamalign
