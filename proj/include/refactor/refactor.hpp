#pragma once

// Umbrella header.

#include "refactor/association.hpp"
#include "refactor/dcor.hpp"
#include "refactor/image.hpp"
#include "refactor/io.hpp"
#include "refactor/isotonic.hpp"
#include "refactor/loadings.hpp"
#include "refactor/matrix.hpp"
#include "refactor/metrics.hpp"
#include "refactor/minres.hpp"
#include "refactor/normal.hpp"
#include "refactor/parallel.hpp"
#include "refactor/partition.hpp"
#include "refactor/reconstruct.hpp"
#include "refactor/refactor_analysis.hpp"
#include "refactor/rng.hpp"
#include "refactor/sim.hpp"
#include "refactor/tetrachoric.hpp"
#include "refactor/traditional.hpp"
#include "refactor/verifactor.hpp"
