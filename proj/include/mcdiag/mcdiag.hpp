#pragma once

#include "mcdiag/chain.hpp"
#include "mcdiag/distributions.hpp"
#include "mcdiag/error.hpp"
#include "mcdiag/gelman_rubin.hpp"
#include "mcdiag/geweke.hpp"
#include "mcdiag/heidelberger_welch.hpp"
#include "mcdiag/kde.hpp"
#include "mcdiag/kl.hpp"
#include "mcdiag/raftery_lewis.hpp"
#include "mcdiag/rng.hpp"
#include "mcdiag/stopping.hpp"
#include "mcdiag/target.hpp"
#include "mcdiag/variance.hpp"
#include "mcdiag/samplers/exponential.hpp"
#include "mcdiag/samplers/logistic.hpp"
#include "mcdiag/samplers/optimize.hpp"
#include "mcdiag/samplers/sixmodal.hpp"
