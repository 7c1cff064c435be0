// Copyright 2026 The duofm authors
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

namespace duofm {

/// Base class for all duofm exceptions.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Mesh loading and topology.
class ParseError : public Error {
public:
    ParseError(const std::string& msg, long line = 0)
        : Error(line > 0 ? msg + " (line " + std::to_string(line) + ")" : msg), line_(line) {}
    long line() const noexcept { return line_; }

private:
    long line_;
};

class UnsupportedFormatError : public Error {
public:
    using Error::Error;
};

class TopologyError : public Error {
public:
    using Error::Error;
};

class GenerationError : public Error {
public:
    using Error::Error;
};

// Operator assembly.
class NumericalError : public Error {
public:
    using Error::Error;
};

class FrameError : public Error {
public:
    using Error::Error;
};

class RankError : public Error {
public:
    using Error::Error;
};

// Spectral solves.
class ConvergenceError : public Error {
public:
    using Error::Error;
};

class FactorizationError : public Error {
public:
    using Error::Error;
};

class SpectrumError : public Error {
public:
    using Error::Error;
};

class DimensionError : public Error {
public:
    using Error::Error;
};

class SolveError : public Error {
public:
    using Error::Error;
};

// Spectral cache.
class CacheVersionError : public Error {
public:
    using Error::Error;
};

class HashMismatchError : public Error {
public:
    using Error::Error;
};

class CorruptionError : public Error {
public:
    using Error::Error;
};

// Evaluation and training.
class DisconnectedError : public Error {
public:
    using Error::Error;
};

class DivergenceError : public Error {
public:
    using Error::Error;
};

} // namespace duofm
