#pragma once

#include "bandit.hpp"
#include "confidence.hpp"
#include "engine.hpp"
#include "harness.hpp"
#include "lambert_w.hpp"
#include "oracle.hpp"
#include "parallel.hpp"
#include "rng.hpp"
