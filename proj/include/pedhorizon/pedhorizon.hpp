#pragma once

#include "pedhorizon/error.hpp"
#include "pedhorizon/random.hpp"
#include "pedhorizon/scenario.hpp"
#include "pedhorizon/kinematics.hpp"
#include "pedhorizon/predictor.hpp"
#include "pedhorizon/planner.hpp"
#include "pedhorizon/simulation.hpp"
#include "pedhorizon/metrics.hpp"
#include "pedhorizon/requirements.hpp"
#include "pedhorizon/config.hpp"
#include "pedhorizon/io.hpp"
#include "pedhorizon/sweep.hpp"
#include "pedhorizon/pipeline.hpp"
