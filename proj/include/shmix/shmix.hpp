#pragma once

#include "shmix/calibration.hpp"
#include "shmix/distributions.hpp"
#include "shmix/error.hpp"
#include "shmix/experiments.hpp"
#include "shmix/rng.hpp"
#include "shmix/statistics.hpp"
#include "shmix/theory.hpp"
