// SPDX-License-Identifier: Apache-2.0

// Umbrella header pulling in the whole public API.

#ifndef SLOTFLOW_SLOTFLOW_HPP
#define SLOTFLOW_SLOTFLOW_HPP

#include "slotflow/approx.hpp"
#include "slotflow/backend.hpp"
#include "slotflow/blockplan.hpp"
#include "slotflow/conv.hpp"
#include "slotflow/io.hpp"
#include "slotflow/linalg.hpp"
#include "slotflow/model.hpp"
#include "slotflow/mpc.hpp"
#include "slotflow/packing.hpp"
#include "slotflow/pipeline.hpp"
#include "slotflow/types.hpp"

#endif
