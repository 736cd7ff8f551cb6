#ifndef RANDNET_RANDNET_HPP
#define RANDNET_RANDNET_HPP

#include "randnet/core.hpp"
#include "randnet/rng.hpp"
#include "randnet/measurement.hpp"
#include "randnet/dictionary.hpp"
#include "randnet/encoder.hpp"
#include "randnet/model.hpp"
#include "randnet/grad.hpp"
#include "randnet/data.hpp"
#include "randnet/optim.hpp"
#include "randnet/train.hpp"
#include "randnet/baseline.hpp"
#include "randnet/io.hpp"
#include "randnet/bench.hpp"

#endif  // RANDNET_RANDNET_HPP
