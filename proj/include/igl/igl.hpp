// Umbrella header.
#pragma once

#include "igl/constraints.hpp"
#include "igl/core.hpp"
#include "igl/dataset.hpp"
#include "igl/decode.hpp"
#include "igl/eval/assignment.hpp"
#include "igl/eval/scorers.hpp"
#include "igl/io.hpp"
#include "igl/lingo.hpp"
#include "igl/nnet/checkpoint.hpp"
#include "igl/nnet/gradcheck.hpp"
#include "igl/nnet/layers.hpp"
#include "igl/nnet/network.hpp"
#include "igl/nnet/optim.hpp"
#include "igl/nnet/train.hpp"
#include "igl/pipeline.hpp"
#include "igl/synthetic.hpp"
