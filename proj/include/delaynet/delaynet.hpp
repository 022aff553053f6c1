#pragma once

#include "delaynet/analysis.hpp"
#include "delaynet/delays.hpp"
#include "delaynet/fringe.hpp"
#include "delaynet/limitbp.hpp"
#include "delaynet/quadrature.hpp"
#include "delaynet/replicas.hpp"
#include "delaynet/rng.hpp"
#include "delaynet/stats.hpp"
#include "delaynet/tree.hpp"
#include "delaynet/treegen.hpp"
#include "delaynet/version.hpp"
