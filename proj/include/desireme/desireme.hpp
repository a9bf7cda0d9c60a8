#pragma once

#include "desireme/checkpoint.hpp"
#include "desireme/domain_labels.hpp"
#include "desireme/errors.hpp"
#include "desireme/io.hpp"
#include "desireme/labeler.hpp"
#include "desireme/losses.hpp"
#include "desireme/metrics.hpp"
#include "desireme/moe.hpp"
#include "desireme/parallel.hpp"
#include "desireme/pipeline.hpp"
#include "desireme/retrieval.hpp"
#include "desireme/stats.hpp"
#include "desireme/synth.hpp"
#include "desireme/training.hpp"
#include "desireme/vecmath.hpp"
