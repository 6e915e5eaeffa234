#pragma once

// Umbrella header for the full toolkit.

#include "gsan/autodiff.hpp"
#include "gsan/checkpoint.hpp"
#include "gsan/config.hpp"
#include "gsan/data.hpp"
#include "gsan/error.hpp"
#include "gsan/graph.hpp"
#include "gsan/matrix.hpp"
#include "gsan/model.hpp"
#include "gsan/operators.hpp"
#include "gsan/rng.hpp"
#include "gsan/scattering.hpp"
#include "gsan/sparse.hpp"
#include "gsan/train.hpp"
