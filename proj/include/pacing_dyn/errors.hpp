// Copyright 2026 The pacing-dyn Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef PACING_DYN_ERRORS_HPP_
#define PACING_DYN_ERRORS_HPP_

#include <stdexcept>
#include <string>

namespace pacing_dyn {

// All library failures derive from Error so callers can catch one type.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidInput : public Error {
 public:
  using Error::Error;
};

// Exhaustive enumeration requested beyond its supported horizon.
class InstanceTooLarge : public Error {
 public:
  using Error::Error;
};

// A reachable DP bid state left the discretized bid range.
class GridOverflow : public Error {
 public:
  using Error::Error;
};

class ScheduleExceedsHorizon : public Error {
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

}  // namespace pacing_dyn

#endif  // PACING_DYN_ERRORS_HPP_
