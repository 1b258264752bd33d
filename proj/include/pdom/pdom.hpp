#pragma once

#include "pdom/bench.hpp"
#include "pdom/diagnostics.hpp"
#include "pdom/dogleg.hpp"
#include "pdom/problems.hpp"
#include "pdom/prox.hpp"
#include "pdom/quadratic.hpp"
#include "pdom/solver.hpp"
