// Copyright 2026 The qldp Authors
// SPDX-License-Identifier: Apache-2.0

/// Umbrella header.
#pragma once

#include "qldp/core.hpp"
#include "qldp/counting.hpp"
#include "qldp/harness/config.hpp"
#include "qldp/harness/experiment.hpp"
#include "qldp/harness/record.hpp"
#include "qldp/kernel.hpp"
#include "qldp/modes.hpp"
#include "qldp/quadrature.hpp"
#include "qldp/rate.hpp"
#include "qldp/roots.hpp"
#include "qldp/thermo.hpp"
