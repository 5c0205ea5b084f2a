#pragma once

// Umbrella header: generalized exponential lifetimes under progressive
// type-I interval censoring — distribution core, data generation, truncated
// conditional expectations, EM / maximum-likelihood estimators, and the
// seeded simulation-study harness.

#include "gefit/censoring.hpp"
#include "gefit/estep.hpp"
#include "gefit/estimators.hpp"
#include "gefit/ge.hpp"
#include "gefit/quadrature.hpp"
#include "gefit/rng.hpp"
#include "gefit/special.hpp"
#include "gefit/study.hpp"
