#pragma once

// Cluster-covariance RBF kernels and an SVM benchmarking harness around them.

#include "ckrbf/clustering.hpp"
#include "ckrbf/dataset.hpp"
#include "ckrbf/error.hpp"
#include "ckrbf/evaluation.hpp"
#include "ckrbf/gaussian.hpp"
#include "ckrbf/kernel.hpp"
#include "ckrbf/rng.hpp"
#include "ckrbf/serialize.hpp"
#include "ckrbf/svm.hpp"
#include "ckrbf/version.hpp"
