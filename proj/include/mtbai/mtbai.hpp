// Umbrella header.
#pragma once

#include "mtbai/divergence.hpp"
#include "mtbai/errors.hpp"
#include "mtbai/format.hpp"
#include "mtbai/harness.hpp"
#include "mtbai/instance_io.hpp"
#include "mtbai/model.hpp"
#include "mtbai/oracle.hpp"
#include "mtbai/plot.hpp"
#include "mtbai/policies.hpp"
#include "mtbai/transport.hpp"
