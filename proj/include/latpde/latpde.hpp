#pragma once

#include "latpde/core.hpp"
#include "latpde/flow_series.hpp"
#include "latpde/local_poly.hpp"
#include "latpde/term_library.hpp"
#include "latpde/sparse_regression.hpp"
#include "latpde/kolmogorov.hpp"
#include "latpde/experiments.hpp"
#include "latpde/run_config.hpp"
