#pragma once

#include <stdexcept>
#include <string>

namespace gdsw {

/// Base class of every error raised by the library. `kind()` is a stable
/// machine-readable name used in study tables and CLI reports.
class Error : public std::runtime_error {
public:
   using std::runtime_error::runtime_error;
   virtual const char* kind() const noexcept { return "Error"; }
};

class InvalidArgument : public Error {
public:
   using Error::Error;
   const char* kind() const noexcept override { return "InvalidArgument"; }
};

class DimensionMismatch : public Error {
public:
   using Error::Error;
   const char* kind() const noexcept override { return "DimensionMismatch"; }
};

class StructurallySingular : public Error {
public:
   using Error::Error;
   const char* kind() const noexcept override { return "StructurallySingular"; }
};

class NumericallySingular : public Error {
public:
   using Error::Error;
   const char* kind() const noexcept override { return "NumericallySingular"; }
};

/// Terminal coarse problem exceeds the configured size cap.
class CoarseTooLarge : public Error {
public:
   CoarseTooLarge(const std::string& what, long long order) : Error(what), order_(order) {}
   const char* kind() const noexcept override { return "CoarseTooLarge"; }
   long long order() const noexcept { return order_; }

private:
   long long order_;
};

class ParseError : public Error {
public:
   using Error::Error;
   const char* kind() const noexcept override { return "ParseError"; }
};

}  // namespace gdsw
