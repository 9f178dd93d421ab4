#pragma once

#include "lexkit/checkpoint.hpp"
#include "lexkit/config.hpp"
#include "lexkit/data.hpp"
#include "lexkit/encoders.hpp"
#include "lexkit/errors.hpp"
#include "lexkit/gradcheck.hpp"
#include "lexkit/lktransformer.hpp"
#include "lexkit/matcher.hpp"
#include "lexkit/metrics.hpp"
#include "lexkit/model.hpp"
#include "lexkit/ops.hpp"
#include "lexkit/params.hpp"
#include "lexkit/tensor.hpp"
#include "lexkit/textgraph.hpp"
#include "lexkit/train.hpp"
