#pragma once

#include "riftlab/attack.hpp"
#include "riftlab/checkpoint.hpp"
#include "riftlab/config.hpp"
#include "riftlab/data.hpp"
#include "riftlab/metrics.hpp"
#include "riftlab/mrc.hpp"
#include "riftlab/network.hpp"
#include "riftlab/rift.hpp"
#include "riftlab/tensor.hpp"
