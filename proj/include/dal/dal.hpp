#pragma once

#include "dal/common.hpp"
#include "dal/dataio.hpp"
#include "dal/diagnostics.hpp"
#include "dal/efmdi.hpp"
#include "dal/experiment.hpp"
#include "dal/manifold.hpp"
#include "dal/model.hpp"
#include "dal/solvers.hpp"
#include "dal/transport.hpp"
