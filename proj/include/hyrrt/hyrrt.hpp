#pragma once

#include <hyrrt/commands.hpp>
#include <hyrrt/config.hpp>
#include <hyrrt/hybrid_system.hpp>
#include <hyrrt/hybrid_time.hpp>
#include <hyrrt/planner.hpp>
#include <hyrrt/propagation.hpp>
#include <hyrrt/serialization.hpp>
#include <hyrrt/systems.hpp>
#include <hyrrt/types.hpp>
