#pragma once

// Umbrella header for the whole library.

#include "errors.hpp"
#include "linalg.hpp"
#include "ode.hpp"
#include "perturbation.hpp"
#include "maps.hpp"
#include "orbits.hpp"
#include "continuation.hpp"
#include "combinatorics.hpp"
#include "parallel.hpp"
#include "census.hpp"
#include "sweep.hpp"
#include "io.hpp"
