#pragma once

// Everything in one include.

#include "sparsetde/association.hpp"
#include "sparsetde/bench.hpp"
#include "sparsetde/error.hpp"
#include "sparsetde/gram.hpp"
#include "sparsetde/lag_grid.hpp"
#include "sparsetde/lasso.hpp"
#include "sparsetde/lasso_path.hpp"
#include "sparsetde/parallel.hpp"
#include "sparsetde/params_io.hpp"
#include "sparsetde/pvalue.hpp"
#include "sparsetde/random.hpp"
#include "sparsetde/series_io.hpp"
#include "sparsetde/shift_matrix.hpp"
#include "sparsetde/signal.hpp"
#include "sparsetde/simulate.hpp"
#include "sparsetde/tde.hpp"
#include "sparsetde/text.hpp"
#include "sparsetde/version.hpp"
