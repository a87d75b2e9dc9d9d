#pragma once

#include "errors.hpp"
#include "geometry.hpp"
#include "grid.hpp"
#include "heat_step.hpp"
#include "parallel.hpp"
#include "pde_reference.hpp"
#include "semigroup.hpp"
#include "trajectory.hpp"
#include "trig_series.hpp"
#include "version.hpp"
