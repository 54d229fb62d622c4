#pragma once

// Umbrella header for the loopflow library.

#include "loopflow/cycle_basis.hpp"
#include "loopflow/errors.hpp"
#include "loopflow/hydraulics.hpp"
#include "loopflow/linsolve.hpp"
#include "loopflow/netfile.hpp"
#include "loopflow/network.hpp"
#include "loopflow/report.hpp"
#include "loopflow/solvers.hpp"
