#pragma once

/// @file mcd.hpp
/// Umbrella header for the meshfree staggered solver library.

#include "mcd/geometry.hpp"
#include "mcd/mls.hpp"
#include "mcd/linalg.hpp"
#include "mcd/operators.hpp"
#include "mcd/acoustics.hpp"
#include "mcd/ns.hpp"
#include "mcd/benchmarks.hpp"
#include "mcd/io.hpp"
#include "mcd/config.hpp"
#include "mcd/cases.hpp"
