#pragma once

#include "dc.hpp"
#include "ensemble.hpp"
#include "gauss_newton.hpp"
#include "geometry.hpp"
#include "harness.hpp"
#include "initializer.hpp"
#include "inner.hpp"
#include "io.hpp"
#include "link.hpp"
#include "objective.hpp"
#include "power_iteration.hpp"
#include "random.hpp"
#include "signal.hpp"
#include "sparse.hpp"
