#ifndef NSADMM_NSADMM_HPP_
#define NSADMM_NSADMM_HPP_

#include "nsadmm/config_io.hpp"
#include "nsadmm/diagnostics.hpp"
#include "nsadmm/errors.hpp"
#include "nsadmm/estimator.hpp"
#include "nsadmm/experiment.hpp"
#include "nsadmm/generators.hpp"
#include "nsadmm/oracle.hpp"
#include "nsadmm/problem.hpp"
#include "nsadmm/prox.hpp"
#include "nsadmm/rng.hpp"
#include "nsadmm/solver.hpp"
#include "nsadmm/spectral.hpp"

#endif  // NSADMM_NSADMM_HPP_
