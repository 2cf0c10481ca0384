#pragma once

// Umbrella header for the simdecay library.

#include "simdecay/analysis.hpp"
#include "simdecay/decay.hpp"
#include "simdecay/engine.hpp"
#include "simdecay/format.hpp"
#include "simdecay/ingest.hpp"
#include "simdecay/scheduler.hpp"
#include "simdecay/similarity.hpp"
#include "simdecay/stability.hpp"
#include "simdecay/store.hpp"
#include "simdecay/types.hpp"
