#pragma once

#include "deqgp/activation.hpp"
#include "deqgp/bivariate.hpp"
#include "deqgp/config.hpp"
#include "deqgp/dataset.hpp"
#include "deqgp/errors.hpp"
#include "deqgp/experiments.hpp"
#include "deqgp/gp.hpp"
#include "deqgp/hermite.hpp"
#include "deqgp/io.hpp"
#include "deqgp/kernel.hpp"
#include "deqgp/parallel.hpp"
#include "deqgp/quadrature.hpp"
#include "deqgp/rng.hpp"
#include "deqgp/simulator.hpp"
#include "deqgp/stats.hpp"
