#pragma once

#include "wavescat/error.hpp"
#include "wavescat/evolve.hpp"
#include "wavescat/fft.hpp"
#include "wavescat/harness/config.hpp"
#include "wavescat/harness/format.hpp"
#include "wavescat/harness/run.hpp"
#include "wavescat/harness/scenario.hpp"
#include "wavescat/harness/table.hpp"
#include "wavescat/measure.hpp"
#include "wavescat/packet.hpp"
#include "wavescat/stationary.hpp"
#include "wavescat/units.hpp"
