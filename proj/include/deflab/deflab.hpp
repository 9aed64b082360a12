#pragma once

#include "deficiency.hpp"
#include "extremal.hpp"
#include "grid.hpp"
#include "io.hpp"
#include "mixture.hpp"
#include "numeric.hpp"
#include "scenarios.hpp"
#include "tilt.hpp"
