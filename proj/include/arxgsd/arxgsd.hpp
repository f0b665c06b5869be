#pragma once

/// @file
/// Umbrella header for the arxgsd library.

#include "arxgsd/core_types.hpp"
#include "arxgsd/estimation.hpp"
#include "arxgsd/identify.hpp"
#include "arxgsd/io.hpp"
#include "arxgsd/linalg.hpp"
#include "arxgsd/rng.hpp"
#include "arxgsd/signals.hpp"
#include "arxgsd/validation.hpp"
