#pragma once

// Umbrella header for the mmstock library.

#include "mmstock/config.hpp"
#include "mmstock/date.hpp"
#include "mmstock/error.hpp"
#include "mmstock/evaluation.hpp"
#include "mmstock/features.hpp"
#include "mmstock/forecaster.hpp"
#include "mmstock/ingest.hpp"
#include "mmstock/market_sim.hpp"
#include "mmstock/pipeline.hpp"
#include "mmstock/sentiment.hpp"
#include "mmstock/textprep.hpp"
