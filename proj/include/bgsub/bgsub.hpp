#pragma once

// Umbrella header.

#include "bgsub/bench.hpp"
#include "bgsub/core.hpp"
#include "bgsub/factory.hpp"
#include "bgsub/frameio.hpp"
#include "bgsub/gmg.hpp"
#include "bgsub/metrics.hpp"
#include "bgsub/mog.hpp"
#include "bgsub/mog2.hpp"
#include "bgsub/synthgen.hpp"
