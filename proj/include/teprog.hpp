#pragma once

#include "teprog/analysis.hpp"
#include "teprog/baseline.hpp"
#include "teprog/errors.hpp"
#include "teprog/extended_real.hpp"
#include "teprog/geometry.hpp"
#include "teprog/io.hpp"
#include "teprog/linalg.hpp"
#include "teprog/problems.hpp"
#include "teprog/prox.hpp"
#include "teprog/sets.hpp"
#include "teprog/solver.hpp"
#include "teprog/subdifferential.hpp"
#include "teprog/telescope.hpp"
