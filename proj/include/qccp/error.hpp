#pragma once

#include <stdexcept>
#include <string>

namespace qccp {

enum class ErrorKind {
  Input,     // malformed or inconsistent arguments
  Domain,    // argument outside the mathematical domain (singular, indefinite, p not in (0,1))
  Fit,       // EM failed on every restart
  Solve,     // optimizer could not produce a usable answer
  Io,        // file or parse failure
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void throw_input(const std::string& msg) { throw Error(ErrorKind::Input, msg); }
[[noreturn]] inline void throw_domain(const std::string& msg) { throw Error(ErrorKind::Domain, msg); }

}  // namespace qccp
