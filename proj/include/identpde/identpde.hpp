#pragma once

#include "identpde/denoise.hpp"
#include "identpde/derivatives.hpp"
#include "identpde/dictionary.hpp"
#include "identpde/evolution.hpp"
#include "identpde/grid.hpp"
#include "identpde/ident.hpp"
#include "identpde/simulate.hpp"
#include "identpde/sparse_solver.hpp"
#include "identpde/types.hpp"
