#pragma once

// Convenience header pulling in the whole library.

#include "imclr/array_config.hpp"
#include "imclr/config.hpp"
#include "imclr/conv.hpp"
#include "imclr/cycles.hpp"
#include "imclr/decomposition.hpp"
#include "imclr/energy.hpp"
#include "imclr/error.hpp"
#include "imclr/mapping.hpp"
#include "imclr/matrix.hpp"
#include "imclr/network.hpp"
#include "imclr/planner.hpp"
#include "imclr/report.hpp"
#include "imclr/svd.hpp"
#include "imclr/verify.hpp"
