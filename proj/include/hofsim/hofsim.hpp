#pragma once

#include "hofsim/config.hpp"
#include "hofsim/dynamics.hpp"
#include "hofsim/errors.hpp"
#include "hofsim/integrator.hpp"
#include "hofsim/model.hpp"
#include "hofsim/modulation.hpp"
#include "hofsim/numerics.hpp"
#include "hofsim/parallel.hpp"
#include "hofsim/spectroscopy.hpp"
#include "hofsim/sweep.hpp"
