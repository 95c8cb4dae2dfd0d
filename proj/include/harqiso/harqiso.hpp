#pragma once

#include "harqiso/errors.hpp"
#include "harqiso/exponent.hpp"
#include "harqiso/numeric.hpp"
#include "harqiso/optimizer.hpp"
#include "harqiso/protocol_sim.hpp"
#include "harqiso/queueing.hpp"
#include "harqiso/rng.hpp"
#include "harqiso/wer_model.hpp"
