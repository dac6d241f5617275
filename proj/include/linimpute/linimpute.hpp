#pragma once

// Umbrella header for the linimpute library.

#include "linimpute/baseline.hpp"
#include "linimpute/bench.hpp"
#include "linimpute/dataset.hpp"
#include "linimpute/irmi.hpp"
#include "linimpute/matrix.hpp"
#include "linimpute/oli.hpp"
#include "linimpute/rng.hpp"
#include "linimpute/synthetic.hpp"
#include "linimpute/version.hpp"
