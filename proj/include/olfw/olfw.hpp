#pragma once

#include "olfw/afw.hpp"
#include "olfw/analysis.hpp"
#include "olfw/core.hpp"
#include "olfw/difw.hpp"
#include "olfw/fw.hpp"
#include "olfw/herding.hpp"
#include "olfw/objectives.hpp"
#include "olfw/reference.hpp"
#include "olfw/regions.hpp"
