#pragma once

#include "asri/aggregation.hpp"
#include "asri/backtest.hpp"
#include "asri/connectedness.hpp"
#include "asri/econometrics.hpp"
#include "asri/event_study.hpp"
#include "asri/market_data.hpp"
#include "asri/market_snapshot.hpp"
#include "asri/regime_hmm.hpp"
#include "asri/snapshot_store.hpp"
#include "asri/subindices.hpp"
