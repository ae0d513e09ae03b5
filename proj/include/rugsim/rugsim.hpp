#pragma once

#include "rugsim/core/error.hpp"
#include "rugsim/core/fixed.hpp"
#include "rugsim/core/hash.hpp"
#include "rugsim/core/ids.hpp"
#include "rugsim/core/ledger.hpp"
#include "rugsim/core/rng.hpp"
#include "rugsim/detection.hpp"
#include "rugsim/dispute.hpp"
#include "rugsim/figures.hpp"
#include "rugsim/harness/engine.hpp"
#include "rugsim/harness/margins.hpp"
#include "rugsim/harness/scenario.hpp"
#include "rugsim/harness/schema.hpp"
#include "rugsim/harness/sweep.hpp"
#include "rugsim/harness/trace.hpp"
#include "rugsim/harness/verify.hpp"
#include "rugsim/insurance.hpp"
#include "rugsim/market.hpp"
#include "rugsim/perps.hpp"
#include "rugsim/rewards.hpp"
#include "rugsim/rugproof.hpp"
#include "rugsim/settle.hpp"
#include "rugsim/tokenomics.hpp"
#include "rugsim/vault.hpp"
