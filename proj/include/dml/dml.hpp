#pragma once

// Umbrella header.

#include "dml/matrix.hpp"
#include "dml/rng.hpp"
#include "dml/dataset.hpp"
#include "dml/metric.hpp"
#include "dml/projection.hpp"
#include "dml/objective.hpp"
#include "dml/solver.hpp"
#include "dml/knn.hpp"
#include "dml/cross_validation.hpp"
#include "dml/error_matrix.hpp"
#include "dml/stats.hpp"
#include "dml/io.hpp"
#include "dml/synthetic.hpp"
#include "dml/parallel.hpp"
#include "dml/experiment.hpp"
