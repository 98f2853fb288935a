#pragma once

#include <stdexcept>
#include <string>

namespace eqnn {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Operands belong to different group contexts (spatial dimension or stabilizer).
class ContextError : public Error {
 public:
  using Error::Error;
};

class SubgroupError : public Error {
 public:
  using Error::Error;
};

class UnsupportedGroupError : public Error {
 public:
  using Error::Error;
};

/// No hardcoded irrep table exists for the group.
class NoTableError : public Error {
 public:
  using Error::Error;
};

/// A representation fails its structural checks, or a character computation
/// produced a non-integer multiplicity.
class RepresentationError : public Error {
 public:
  using Error::Error;
};

class DecompositionError : public Error {
 public:
  using Error::Error;
};

class WindowError : public Error {
 public:
  using Error::Error;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

/// Nonlinearity or pooling applied to a capsule it does not commute with.
class AdmissibilityError : public Error {
 public:
  using Error::Error;
};

class SpecError : public Error {
 public:
  using Error::Error;
};

class OverflowError : public Error {
 public:
  using Error::Error;
};

}  // namespace eqnn
