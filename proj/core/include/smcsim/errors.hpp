#pragma once

#include <stdexcept>
#include <string>

namespace smcsim {

/// Raised for malformed or inconsistent configuration input. The message
/// names the offending key or the violated invariant.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// Raised for malformed trace files. The message carries the 1-based line
/// number of the offending record.
class TraceError : public std::runtime_error {
 public:
  explicit TraceError(const std::string& what) : std::runtime_error(what) {}
};

/// Raised when a command violates the port protocol (bad burst length,
/// unaligned base, footprint outside the address space).
class ProtocolError : public std::runtime_error {
 public:
  explicit ProtocolError(const std::string& what) : std::runtime_error(what) {}
};

/// Raised when internal bookkeeping detects an impossible state: an
/// unmatched return, a duplicate beat, a conservation breach. These are
/// simulator bugs, never user errors, and they abort the run.
class IntegrityError : public std::logic_error {
 public:
  explicit IntegrityError(const std::string& what) : std::logic_error(what) {}
};

/// Raised when an isolation audit is asked to compare runs that were not
/// set up as required (mismatched configs or workloads).
class AuditError : public std::runtime_error {
 public:
  explicit AuditError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace smcsim
