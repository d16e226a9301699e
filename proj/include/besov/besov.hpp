#pragma once

// Umbrella header.

#include "besov/carleson.hpp"
#include "besov/classes.hpp"
#include "besov/cli.hpp"
#include "besov/core.hpp"
#include "besov/geometry.hpp"
#include "besov/kernels.hpp"
#include "besov/sampling.hpp"
#include "besov/serialize.hpp"
#include "besov/weights.hpp"
