#pragma once

// Zero-coupon longevity bond toolkit: closed-form affine pricing, exact
// discrete state space, Kalman filtering, maximum-likelihood calibration,
// and Monte Carlo survival simulation.

#include "zclb/affine.hpp"
#include "zclb/calibration.hpp"
#include "zclb/csv.hpp"
#include "zclb/kalman.hpp"
#include "zclb/nelder_mead.hpp"
#include "zclb/panel.hpp"
#include "zclb/rng.hpp"
#include "zclb/simulation.hpp"
#include "zclb/state_space.hpp"
