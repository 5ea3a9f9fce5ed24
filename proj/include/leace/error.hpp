// Copyright 2026 The leace-embed Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef LEACE_ERROR_HPP_
#define LEACE_ERROR_HPP_

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>

namespace leace {

// Root of every error the library throws. The CLI maps subclasses onto exit
// codes through category().
class Error : public std::runtime_error {
 public:
  enum class Category { kInput, kNumerical };

  explicit Error(const std::string& what, Category category = Category::kInput)
      : std::runtime_error(what), category_(category) {}

  Category category() const noexcept { return category_; }

 private:
  Category category_;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

class ValidationError : public Error {
 public:
  using Error::Error;
};

class InsufficientDataError : public Error {
 public:
  using Error::Error;
};

class EmptyCategoryError : public Error {
 public:
  using Error::Error;
};

class DegenerateInputError : public Error {
 public:
  using Error::Error;
};

class NumericalError : public Error {
 public:
  explicit NumericalError(const std::string& what)
      : Error(what, Category::kNumerical) {}
};

class NotPsdError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

// Malformed file or payload. Always carries a location: a byte offset for
// binary/JSON payloads, a 1-based line number for line-oriented text.
class FormatError : public Error {
 public:
  enum class Unit { kByte, kLine };

  FormatError(const std::string& what, Unit unit, std::size_t location)
      : Error(what + (unit == Unit::kByte ? " (at byte " : " (at line ") +
              std::to_string(location) + ")"),
        unit_(unit),
        location_(location) {}

  static FormatError at_byte(const std::string& what, std::size_t offset) {
    return FormatError(what, Unit::kByte, offset);
  }
  static FormatError at_line(const std::string& what, std::size_t line) {
    return FormatError(what, Unit::kLine, line);
  }

  Unit unit() const noexcept { return unit_; }
  std::size_t location() const noexcept { return location_; }

 private:
  Unit unit_;
  std::size_t location_;
};

}  // namespace leace

#endif  // LEACE_ERROR_HPP_
