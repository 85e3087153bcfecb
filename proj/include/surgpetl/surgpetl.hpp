#pragma once

#include "surgpetl/adapters.hpp"
#include "surgpetl/backbone.hpp"
#include "surgpetl/blocks.hpp"
#include "surgpetl/checkpoint.hpp"
#include "surgpetl/config.hpp"
#include "surgpetl/dataset.hpp"
#include "surgpetl/errors.hpp"
#include "surgpetl/harness.hpp"
#include "surgpetl/head.hpp"
#include "surgpetl/metrics.hpp"
#include "surgpetl/model.hpp"
#include "surgpetl/nn.hpp"
#include "surgpetl/optim.hpp"
#include "surgpetl/rng.hpp"
#include "surgpetl/sampling.hpp"
#include "surgpetl/schedule.hpp"
#include "surgpetl/synth.hpp"
#include "surgpetl/tensor.hpp"
