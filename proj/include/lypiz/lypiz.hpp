#pragma once

#include "lypiz/chain_limit.hpp"
#include "lypiz/distribution.hpp"
#include "lypiz/error.hpp"
#include "lypiz/gmc/coulomb.hpp"
#include "lypiz/gmc/discrete_gmc.hpp"
#include "lypiz/gmc/lattice.hpp"
#include "lypiz/gmc/rng.hpp"
#include "lypiz/graph.hpp"
#include "lypiz/io.hpp"
#include "lypiz/ly_class.hpp"
#include "lypiz/mgf.hpp"
#include "lypiz/numeric.hpp"
#include "lypiz/spin_gibbs.hpp"
#include "lypiz/zeros.hpp"
