#pragma once

// Convenience umbrella: pulls in the whole library.

#include "cvartrade/config.hpp"
#include "cvartrade/convexity.hpp"
#include "cvartrade/errors.hpp"
#include "cvartrade/learner.hpp"
#include "cvartrade/market_data.hpp"
#include "cvartrade/metrics.hpp"
#include "cvartrade/policy.hpp"
#include "cvartrade/report_io.hpp"
#include "cvartrade/risk.hpp"
#include "cvartrade/synthetic.hpp"
