#pragma once

#include "iqp/csv.hpp"
#include "iqp/errors.hpp"
#include "iqp/gbdt.hpp"
#include "iqp/inequality.hpp"
#include "iqp/labeling.hpp"
#include "iqp/lowess.hpp"
#include "iqp/matrix.hpp"
#include "iqp/model_json.hpp"
#include "iqp/pipeline.hpp"
#include "iqp/provision.hpp"
#include "iqp/resample.hpp"
#include "iqp/rng.hpp"
#include "iqp/shap.hpp"
#include "iqp/stats.hpp"
#include "iqp/synth.hpp"
#include "iqp/thresholds.hpp"
#include "iqp/tract.hpp"
