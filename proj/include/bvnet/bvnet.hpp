#ifndef BVNET_BVNET_HPP
#define BVNET_BVNET_HPP

#include "bvnet/errors.hpp"
#include "bvnet/estimator.hpp"
#include "bvnet/experiments.hpp"
#include "bvnet/io.hpp"
#include "bvnet/likelihood.hpp"
#include "bvnet/markov.hpp"
#include "bvnet/model.hpp"
#include "bvnet/normal.hpp"
#include "bvnet/rng.hpp"
#include "bvnet/transforms.hpp"

#endif  // BVNET_BVNET_HPP
