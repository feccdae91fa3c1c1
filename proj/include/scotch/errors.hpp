/*
 * Copyright 2026 The Scotch Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <stdexcept>
#include <string>

namespace scotch {

// Base class for every error thrown by this library.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// ring
struct OverflowError : Error { using Error::Error; };
struct ConfigMismatch : Error { using Error::Error; };

// sharing
struct InvalidPartyCount : Error { using Error::Error; };
struct MissingShare : Error { using Error::Error; };
struct DuplicateParty : Error { using Error::Error; };
struct LengthMismatch : Error { using Error::Error; };

// nn
struct ShapeMismatch : Error { using Error::Error; };
struct NonFiniteLoss : Error { using Error::Error; };

// data
struct BadMagic : Error { using Error::Error; };
struct DimensionMismatch : Error { using Error::Error; };
struct TruncatedFile : Error { using Error::Error; };
struct OutOfRange : Error { using Error::Error; };
struct SubsetTooLarge : Error { using Error::Error; };

// protocol
struct IncompleteRound : Error { using Error::Error; };
struct DuplicateShare : Error { using Error::Error; };

// transport
struct UnsupportedVersion : Error { using Error::Error; };
struct LengthOverrun : Error { using Error::Error; };
struct TruncatedFrame : Error { using Error::Error; };
struct Timeout : Error { using Error::Error; };
struct ConnectionClosed : Error { using Error::Error; };
struct TransportError : Error { using Error::Error; };

// cli / experiment
struct ConfigError : Error { using Error::Error; };
struct DataNotFound : Error { using Error::Error; };
struct IncompatibleRuns : Error { using Error::Error; };

}  // namespace scotch
