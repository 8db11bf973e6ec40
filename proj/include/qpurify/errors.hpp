// Copyright 2026 The qpurify Authors
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

#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace qpurify {

/// Bad sizes, indices, or parameter values supplied by the caller.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// An operation's documented precondition does not hold for its input.
class ContractViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Input lies outside the region where a formula is valid.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// A curve never reaches the requested value.
class NoCrossingError : public DomainError {
 public:
  using DomainError::DomainError;
};

/// Non-finite state produced during integration.
class NumericalFailure : public std::runtime_error {
 public:
  NumericalFailure(const std::string& what, std::size_t step,
                   std::size_t trajectory = kNoTrajectory)
      : std::runtime_error(what), step_(step), trajectory_(trajectory) {}

  static constexpr std::size_t kNoTrajectory = static_cast<std::size_t>(-1);

  std::size_t step() const noexcept { return step_; }
  std::size_t trajectory() const noexcept { return trajectory_; }
  bool has_trajectory() const noexcept { return trajectory_ != kNoTrajectory; }

 private:
  std::size_t step_;
  std::size_t trajectory_;
};

}  // namespace qpurify
