#pragma once

// Radiative-transfer forward/adjoint/modulated solvers and single-functional
// source reconstruction (Neumann series and Galerkin/Fredholm inversion).

#include "config.hpp"
#include "errors.hpp"
#include "experiment.hpp"
#include "functional.hpp"
#include "grid.hpp"
#include "inversion.hpp"
#include "io.hpp"
#include "medium.hpp"
#include "phantoms.hpp"
#include "rng.hpp"
#include "transport.hpp"
