#ifndef MDPLAB_MDPLAB_HPP
#define MDPLAB_MDPLAB_HPP

#include "algorithms.hpp"
#include "experiments.hpp"
#include "hard_instances.hpp"
#include "io.hpp"
#include "matrix.hpp"
#include "mdp.hpp"
#include "mixing.hpp"
#include "rng.hpp"
#include "sampler.hpp"
#include "split_chain.hpp"
#include "stats.hpp"

#endif
