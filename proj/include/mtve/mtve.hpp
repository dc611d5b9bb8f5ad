#pragma once

#include "mtve/cone_stencil.hpp"
#include "mtve/config.hpp"
#include "mtve/errors.hpp"
#include "mtve/free_solutions.hpp"
#include "mtve/grid.hpp"
#include "mtve/kernels.hpp"
#include "mtve/oracle.hpp"
#include "mtve/parallel.hpp"
#include "mtve/rng.hpp"
#include "mtve/run.hpp"
#include "mtve/solvers.hpp"
#include "mtve/special_functions.hpp"
#include "mtve/volterra.hpp"
