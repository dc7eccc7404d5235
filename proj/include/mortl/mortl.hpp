#pragma once

// Time-limited H2-optimal model order reduction: Gramians and norms over a
// finite horizon [0, tau], balanced-truncation and two-sided-iteration
// initializers, gradient-based optimization, and interpolation-based
// optimality checks.

#include "mortl/error_system.hpp"
#include "mortl/expm.hpp"
#include "mortl/gramians.hpp"
#include "mortl/harness.hpp"
#include "mortl/matrix_market.hpp"
#include "mortl/model_io.hpp"
#include "mortl/optimizer.hpp"
#include "mortl/reducers.hpp"
#include "mortl/schur.hpp"
#include "mortl/sylvester.hpp"
#include "mortl/types.hpp"
#include "mortl/verifier.hpp"
