#pragma once

#include "baselines.hpp"
#include "cmdp.hpp"
#include "dpp.hpp"
#include "dynamics.hpp"
#include "env_server.hpp"
#include "error.hpp"
#include "harness.hpp"
#include "policy_io.hpp"
#include "random.hpp"
#include "scenario_io.hpp"
#include "sources.hpp"
