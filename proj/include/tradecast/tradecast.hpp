#pragma once

// Umbrella header for the whole library.

#include "tradecast/bot.hpp"
#include "tradecast/checkpoint.hpp"
#include "tradecast/commands.hpp"
#include "tradecast/config.hpp"
#include "tradecast/dataset.hpp"
#include "tradecast/errors.hpp"
#include "tradecast/forecast.hpp"
#include "tradecast/loss.hpp"
#include "tradecast/lstm.hpp"
#include "tradecast/matrix.hpp"
#include "tradecast/optim.hpp"
#include "tradecast/rng.hpp"
#include "tradecast/train.hpp"
#include "tradecast/util.hpp"
