#pragma once

#include <autosar/ego_velocity.hpp>
#include <autosar/error_analysis.hpp>
#include <autosar/errors.hpp>
#include <autosar/experiment.hpp>
#include <autosar/radar_model.hpp>
#include <autosar/rng.hpp>
#include <autosar/sar.hpp>
