#pragma once

// Umbrella header: sparse precision models on undirected graphs (DAGAR,
// order-free DAGAR, proper/improper CAR) and hierarchical Bayesian spatial
// regression on top of them.

#include "dagar/errors.hpp"
#include "dagar/formats.hpp"
#include "dagar/graph.hpp"
#include "dagar/inference.hpp"
#include "dagar/linalg.hpp"
#include "dagar/metrics.hpp"
#include "dagar/precision.hpp"
#include "dagar/rng.hpp"
#include "dagar/simulate.hpp"
#include "dagar/sparse.hpp"
#include "dagar/verify.hpp"
