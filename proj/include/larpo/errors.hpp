#pragma once

#include <stdexcept>
#include <string>

namespace larpo {

// Error taxonomy. Everything derives from Error so the CLI can map
// categories onto exit codes without listing each type.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

class InvalidId : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};

class WrongArity : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};

class ListTooShort : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};

class GoldInNegatives : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};

class ShapeMismatch : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};

class EmptyCluster : public Error {
 public:
  using Error::Error;
};

// Rejection sampling hit its draw cap; the policy is too accurate at the
// requested temperature and the caller may relax.
class ExhaustedRejection : public Error {
 public:
  using Error::Error;
};

class Divergence : public Error {
 public:
  using Error::Error;
};

class EmptyDataset : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace larpo
