#pragma once

#include "rsafe/error.hpp"
#include "rsafe/scalar.hpp"
#include "rsafe/linalg.hpp"
#include "rsafe/model.hpp"
#include "rsafe/occupancy.hpp"
#include "rsafe/planning.hpp"
#include "rsafe/mdp_core.hpp"
#include "rsafe/policy_opt.hpp"
#include "rsafe/lp.hpp"
#include "rsafe/safe_set.hpp"
#include "rsafe/adversary.hpp"
#include "rsafe/rlhf.hpp"
#include "rsafe/traj_bounds.hpp"
