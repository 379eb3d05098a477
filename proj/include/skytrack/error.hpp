// Copyright 2026 The skytrack authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace skytrack {

// Base class for every error raised by the library.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Point at or behind the camera plane; callers treat this as "not observed".
struct NonPositiveDepth : Error {
  using Error::Error;
};

// Two-view triangulation with (near-)parallel rays or coincident centers.
struct DegenerateGeometry : Error {
  using Error::Error;
};

// Alignment input with collinear points.
struct DegenerateConfiguration : Error {
  using Error::Error;
};

// Throttle u <= 0 handed to the dynamics model.
struct NonPositiveThrust : Error {
  using Error::Error;
};

// Acceleration indistinguishable from free fall: thrust magnitude ~ 0.
struct FreeFall : Error {
  explicit FreeFall(const std::string& what, int index = -1)
      : Error(what), index(index) {}
  int index;  // timestep that produced the failure, -1 if not applicable
};

struct InsufficientViews : Error {
  using Error::Error;
};

struct NoResolvableFrames : Error {
  using Error::Error;
};

struct InsufficientSamples : Error {
  using Error::Error;
};

struct LinearSolveFailure : Error {
  using Error::Error;
};

struct LengthMismatch : Error {
  using Error::Error;
};

struct ParseError : Error {
  using Error::Error;
};

struct IoError : Error {
  using Error::Error;
};

}  // namespace skytrack
