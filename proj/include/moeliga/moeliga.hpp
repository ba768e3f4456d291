#pragma once

// Umbrella header.

#include "common.hpp"
#include "chromosome.hpp"
#include "data.hpp"
#include "classifier.hpp"
#include "objectives.hpp"
#include "pareto.hpp"
#include "evolution.hpp"
#include "frontier.hpp"
#include "baselines.hpp"
#include "experiment.hpp"
