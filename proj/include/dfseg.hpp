#pragma once

#include "dfseg/bench.hpp"
#include "dfseg/box.hpp"
#include "dfseg/cli.hpp"
#include "dfseg/coco_ap.hpp"
#include "dfseg/config.hpp"
#include "dfseg/dataset.hpp"
#include "dfseg/error.hpp"
#include "dfseg/eval.hpp"
#include "dfseg/fixture_io.hpp"
#include "dfseg/hungarian.hpp"
#include "dfseg/labels.hpp"
#include "dfseg/losses.hpp"
#include "dfseg/mask.hpp"
#include "dfseg/mask_head.hpp"
#include "dfseg/matcher.hpp"
#include "dfseg/metrics.hpp"
#include "dfseg/parallel.hpp"
#include "dfseg/postprocess.hpp"
#include "dfseg/predictions.hpp"
#include "dfseg/random.hpp"
#include "dfseg/rle.hpp"
#include "dfseg/target.hpp"
#include "dfseg/tensor.hpp"
