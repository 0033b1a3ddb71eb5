#pragma once

#include "trailerplan/common.hpp"
#include "trailerplan/model.hpp"
#include "trailerplan/env.hpp"
#include "trailerplan/poly.hpp"
#include "trailerplan/dubins.hpp"
#include "trailerplan/search.hpp"
#include "trailerplan/problem.hpp"
#include "trailerplan/alm.hpp"
#include "trailerplan/feasibility.hpp"
#include "trailerplan/planner.hpp"
#include "trailerplan/scenario.hpp"
#include "trailerplan/io.hpp"
#include "trailerplan/pipeline.hpp"
