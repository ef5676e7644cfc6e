#pragma once

#include "vhj/analysis.hpp"
#include "vhj/barriers.hpp"
#include "vhj/ergodic.hpp"
#include "vhj/errors.hpp"
#include "vhj/expression.hpp"
#include "vhj/grid.hpp"
#include "vhj/model.hpp"
#include "vhj/ode.hpp"
#include "vhj/scheme.hpp"
