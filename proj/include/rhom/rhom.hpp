#pragma once

#include "rhom/channel.hpp"
#include "rhom/config.hpp"
#include "rhom/detection.hpp"
#include "rhom/errors.hpp"
#include "rhom/experiment.hpp"
#include "rhom/linkbudget.hpp"
#include "rhom/model_core.hpp"
#include "rhom/parallel.hpp"
#include "rhom/photon_mc.hpp"
#include "rhom/presets.hpp"
#include "rhom/qfc.hpp"
#include "rhom/quadrature.hpp"
#include "rhom/rng.hpp"
#include "rhom/units.hpp"
