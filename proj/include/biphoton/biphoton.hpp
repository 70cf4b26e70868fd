#pragma once

#include "biphoton/analysis.hpp"
#include "biphoton/config.hpp"
#include "biphoton/errors.hpp"
#include "biphoton/fit.hpp"
#include "biphoton/manifest.hpp"
#include "biphoton/montecarlo.hpp"
#include "biphoton/oracle.hpp"
#include "biphoton/physics.hpp"
#include "biphoton/run.hpp"
#include "biphoton/spectral.hpp"
