#pragma once

#include <stdexcept>
#include <string>

namespace ulamsteer {

// Root of every exception thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Malformed arguments: dimension mismatch, inverted bounds, bad counts.
class InvalidArgument : public Error {
public:
    using Error::Error;
};

// A state or index that falls outside the partitioned box.
class OutOfDomain : public Error {
public:
    using Error::Error;
};

// Run-config problems (unknown keys, unresolved names, bad measure specs).
class ConfigError : public Error {
public:
    using Error::Error;
};

// Mass reached a cell on which the feedback law is masked out.
class UndefinedLaw : public Error {
public:
    using Error::Error;
};

// Malformed or mismatched artifact files.
class FormatError : public Error {
public:
    using Error::Error;
};

} // namespace ulamsteer
