#pragma once

// Exact-arithmetic solvers for fair assignment under congestion: acceptance
// caps and top-fair assignments, deterministic competitive assignments and
// free-mobility equilibria, the fractional competitive congestion profile
// with its implementation lotteries, and the weighted variants.

#include "congestfair/competitive_det.hpp"
#include "congestfair/competitive_frac.hpp"
#include "congestfair/error.hpp"
#include "congestfair/guarantees.hpp"
#include "congestfair/io.hpp"
#include "congestfair/preferences.hpp"
#include "congestfair/problem.hpp"
#include "congestfair/rational.hpp"
#include "congestfair/weighted_frac.hpp"
