#pragma once

// Umbrella header for the repeater-cell toolkit.

#include "qrcell/config.hpp"
#include "qrcell/entangle.hpp"
#include "qrcell/fit.hpp"
#include "qrcell/noise.hpp"
#include "qrcell/protocol.hpp"
#include "qrcell/qcore.hpp"
#include "qrcell/rates.hpp"
#include "qrcell/rng.hpp"
#include "qrcell/tomo.hpp"
