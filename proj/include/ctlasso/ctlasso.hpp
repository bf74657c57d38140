#pragma once

#include "covariance.hpp"
#include "diagnostics.hpp"
#include "error.hpp"
#include "estimators.hpp"
#include "io.hpp"
#include "metrics.hpp"
#include "model_selection.hpp"
#include "oracle.hpp"
#include "parallel.hpp"
#include "path_solver.hpp"
#include "simulation.hpp"
