#pragma once

// Umbrella header: the whole library in one include.
#include "sparseforge/cli.hpp"
#include "sparseforge/decompose.hpp"
#include "sparseforge/encoding.hpp"
#include "sparseforge/errors.hpp"
#include "sparseforge/expr.hpp"
#include "sparseforge/formats.hpp"
#include "sparseforge/index_map.hpp"
#include "sparseforge/io.hpp"
#include "sparseforge/kernel.hpp"
#include "sparseforge/matrix.hpp"
#include "sparseforge/operators.hpp"
#include "sparseforge/parse.hpp"
#include "sparseforge/planner.hpp"
#include "sparseforge/query.hpp"
#include "sparseforge/query_engine.hpp"
#include "sparseforge/rational.hpp"
#include "sparseforge/storage.hpp"
#include "sparseforge/tensor.hpp"
