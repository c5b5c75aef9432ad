#pragma once

#include "blasso/certificates.hpp"
#include "blasso/config.hpp"
#include "blasso/csv.hpp"
#include "blasso/error.hpp"
#include "blasso/experiments.hpp"
#include "blasso/geometry.hpp"
#include "blasso/kernel.hpp"
#include "blasso/measure.hpp"
#include "blasso/solver.hpp"
