#pragma once

// Umbrella header.

#include "larmor/error.hpp"
#include "larmor/scattering.hpp"
#include "larmor/quadrature.hpp"
#include "larmor/packet.hpp"
#include "larmor/observables.hpp"
#include "larmor/clock.hpp"
#include "larmor/legacy.hpp"
#include "larmor/oracle.hpp"
#include "larmor/config.hpp"
#include "larmor/report.hpp"
#include "larmor/run.hpp"
