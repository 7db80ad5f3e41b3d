#pragma once

#include <stdexcept>
#include <string>

namespace simlens {

// Every failure raised by the library derives from Error. The CLI maps
// BackendError to exit code 3 and everything else to exit code 4.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Failures to load or query a backend (missing files, malformed weights).
class BackendError : public Error {
public:
  using Error::Error;
};

// Failures of a computation on otherwise valid inputs.
class ComputeError : public Error {
public:
  using Error::Error;
};

class TokenizerLoadError : public BackendError {
public:
  using BackendError::BackendError;
};

class ModelLoadError : public BackendError {
public:
  using BackendError::BackendError;
};

class AttentionUnavailable : public BackendError {
public:
  using BackendError::BackendError;
};

class InvalidArgument : public ComputeError {
public:
  using ComputeError::ComputeError;
};

class EmptyInput : public ComputeError {
public:
  using ComputeError::ComputeError;
};

class SequenceTooLong : public ComputeError {
public:
  using ComputeError::ComputeError;
};

class DimensionMismatch : public ComputeError {
public:
  using ComputeError::ComputeError;
};

class HeadMismatch : public ComputeError {
public:
  using ComputeError::ComputeError;
};

class ZeroNormEmbedding : public ComputeError {
public:
  using ComputeError::ComputeError;
};

class PerplexityTooLarge : public ComputeError {
public:
  using ComputeError::ComputeError;
};

class TooFewPoints : public ComputeError {
public:
  using ComputeError::ComputeError;
};

class NaNGradient : public ComputeError {
public:
  using ComputeError::ComputeError;
};

}  // namespace simlens
