/* Copyright 2026 The CAT Codec Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#pragma once

#include <stdexcept>
#include <string>

namespace cat {

// Every error raised by the library derives from Error. The CLI maps the
// three families below onto distinct exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad configuration: missing keys, invalid values, unknown modes.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Bad input data: malformed dataset rows, out-of-range labels, empty sets,
// malformed streams and checkpoints.
class DataError : public Error {
 public:
  using Error::Error;
};

// Failures during computation on otherwise valid input.
class RuntimeFailure : public Error {
 public:
  using Error::Error;
};

class DimensionError : public DataError {
 public:
  using DataError::DataError;
};

class InputError : public DataError {
 public:
  using DataError::DataError;
};

class ParseError : public DataError {
 public:
  ParseError(const std::string& what, std::size_t line)
      : DataError("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

class MalformedCheckpointError : public DataError {
 public:
  using DataError::DataError;
};

class CodebookMismatchError : public DataError {
 public:
  using DataError::DataError;
};

class UndefinedRateError : public DataError {
 public:
  using DataError::DataError;
};

class InternalConsistencyError : public RuntimeFailure {
 public:
  using RuntimeFailure::RuntimeFailure;
};

class DivergenceError : public RuntimeFailure {
 public:
  DivergenceError(const std::string& what, std::size_t step)
      : RuntimeFailure(what), step_(step) {}
  std::size_t step() const { return step_; }

 private:
  std::size_t step_;
};

}  // namespace cat
