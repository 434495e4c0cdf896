// Copyright 2026 The depwsc Authors
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

#include <stdexcept>
#include <string>

namespace depwsc {

/// Base for every error raised by the library. Messages are meant for end
/// users and name the offending item (dims, line number, schema id, ...).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Operand extents do not line up.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// A precondition of an operation was violated by the caller.
class ContractError : public Error {
 public:
  using Error::Error;
};

/// Malformed input file (vocab, CoNLL-U, schema corpus, checkpoint).
class FormatError : public Error {
 public:
  using Error::Error;
};

/// Well-formed CoNLL-U whose head links do not form a tree.
class ParseError : public Error {
 public:
  using Error::Error;
};

/// Parse sidecar does not line up with a candidate sentence.
class AlignmentError : public Error {
 public:
  using Error::Error;
};

/// A prediction required by a metric is missing.
class CoverageError : public Error {
 public:
  using Error::Error;
};

/// A switch group does not have exactly one original and one switched member.
class PairingError : public Error {
 public:
  using Error::Error;
};

/// Non-finite values showed up where the math should stay finite.
class NumericError : public Error {
 public:
  using Error::Error;
};

}  // namespace depwsc
