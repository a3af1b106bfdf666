#pragma once

#include "aoi/analysis.hpp"
#include "aoi/cutoff.hpp"
#include "aoi/distribution.hpp"
#include "aoi/errors.hpp"
#include "aoi/golden_section.hpp"
#include "aoi/io.hpp"
#include "aoi/quadrature.hpp"
#include "aoi/rng.hpp"
#include "aoi/simulation.hpp"
