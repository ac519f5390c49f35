#pragma once

#include "crowdnav/csv.hpp"
#include "crowdnav/env.hpp"
#include "crowdnav/errors.hpp"
#include "crowdnav/eval.hpp"
#include "crowdnav/geometry.hpp"
#include "crowdnav/learner.hpp"
#include "crowdnav/observation.hpp"
#include "crowdnav/pedsim.hpp"
#include "crowdnav/policy.hpp"
#include "crowdnav/reward.hpp"
#include "crowdnav/rng.hpp"
#include "crowdnav/scenario_io.hpp"
#include "crowdnav/svg.hpp"
#include "crowdnav/tasks.hpp"
#include "crowdnav/world.hpp"
