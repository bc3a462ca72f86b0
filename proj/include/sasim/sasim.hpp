#pragma once

#include "sasim/core.hpp"
#include "sasim/engine.hpp"
#include "sasim/logs.hpp"
#include "sasim/metrics.hpp"
#include "sasim/predictor.hpp"
#include "sasim/rng.hpp"
#include "sasim/scenario.hpp"
#include "sasim/signal_control.hpp"
#include "sasim/vehicle.hpp"
