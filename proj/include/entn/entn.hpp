#pragma once

#include "entn/auc.hpp"
#include "entn/checkpoint.hpp"
#include "entn/denoise.hpp"
#include "entn/errors.hpp"
#include "entn/eval.hpp"
#include "entn/event.hpp"
#include "entn/f3tn.hpp"
#include "entn/rng.hpp"
#include "entn/solver.hpp"
#include "entn/svm.hpp"
#include "entn/synth.hpp"
#include "entn/tensor.hpp"
