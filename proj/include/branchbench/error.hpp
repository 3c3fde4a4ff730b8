// Copyright (c) the BranchBench authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <variant>

namespace branchbench {

// Backend error taxonomy plus artifact-level classes (configuration, io,
// precondition). Retryability is a property of the class, not the call site.
enum class ErrorClass {
  none,
  rate_limited,
  branch_limit_exceeded,
  timeout,
  not_found,
  unsupported_operation,
  conflict,
  internal,
  configuration,
  precondition,
  io,
};

std::string_view error_class_name(ErrorClass c);
std::optional<ErrorClass> error_class_from_name(std::string_view s);

// Transient failures a client is expected to retry with backoff. The live
// branch limit is transient: capacity frees up when other workers prune.
constexpr bool is_retryable(ErrorClass c) {
  return c == ErrorClass::rate_limited || c == ErrorClass::timeout ||
         c == ErrorClass::branch_limit_exceeded;
}

struct Error {
  ErrorClass cls = ErrorClass::internal;
  std::string message;

  bool retryable() const { return is_retryable(cls); }
  std::string to_string() const;
};

inline Error make_error(ErrorClass cls, std::string message) {
  return Error{cls, std::move(message)};
}

template <typename T>
class [[nodiscard]] Result {
 public:
  Result(T value) : state_(std::move(value)) {}  // NOLINT: implicit by design
  Result(Error err) : state_(std::move(err)) {}  // NOLINT

  bool ok() const { return state_.index() == 0; }
  explicit operator bool() const { return ok(); }

  T& value() { return std::get<0>(state_); }
  const T& value() const { return std::get<0>(state_); }
  T&& take() { return std::move(std::get<0>(state_)); }

  const Error& error() const { return std::get<1>(state_); }
  Error&& take_error() { return std::move(std::get<1>(state_)); }

 private:
  std::variant<T, Error> state_;
};

template <>
class [[nodiscard]] Result<void> {
 public:
  Result() = default;
  Result(Error err) : err_(std::move(err)) {}  // NOLINT

  bool ok() const { return !err_.has_value(); }
  explicit operator bool() const { return ok(); }
  const Error& error() const { return *err_; }
  Error&& take_error() { return std::move(*err_); }

 private:
  std::optional<Error> err_;
};

}  // namespace branchbench
