#pragma once

#include "smoothctl/awg.hpp"
#include "smoothctl/builtin.hpp"
#include "smoothctl/core.hpp"
#include "smoothctl/errors.hpp"
#include "smoothctl/gradients.hpp"
#include "smoothctl/io.hpp"
#include "smoothctl/linalg.hpp"
#include "smoothctl/magnetometry.hpp"
#include "smoothctl/objectives.hpp"
#include "smoothctl/optimizer.hpp"
#include "smoothctl/parallel.hpp"
#include "smoothctl/plot.hpp"
#include "smoothctl/propagation.hpp"
#include "smoothctl/qpt.hpp"
