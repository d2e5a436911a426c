/*
 * voxfuse : volumetric lesion mask fusion and evaluation
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef VOXFUSE_ERRORS_HPP
#define VOXFUSE_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace voxfuse {

/// Base class for every error thrown by the library.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Two volumes that must share voxel counts do not.
class ShapeMismatchError : public Error {
public:
    using Error::Error;
};

/// A caller violated an operation precondition (empty member list,
/// label outside {1..4}, invalid fusion parameters, ...).
class InvalidArgumentError : public Error {
public:
    using Error::Error;
};

/// A file's bytes do not form a valid NIfTI-1 or VXF1 volume
/// (bad magic, malformed header, unsupported datatype, truncated
/// payload, atlas label out of range).
class FormatError : public Error {
public:
    using Error::Error;
};

/// The operating system refused an open/read/write.
class IoError : public Error {
public:
    using Error::Error;
};

/// A percent error was requested against a zero reference value.
class UndefinedReferenceError : public Error {
public:
    using Error::Error;
};

/// A run or synth configuration file is invalid or references
/// missing inputs.
class ConfigError : public Error {
public:
    using Error::Error;
};

} // namespace voxfuse

#endif
