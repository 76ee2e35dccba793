#pragma once

#include "mshist/core.hpp"
#include "mshist/error.hpp"
#include "mshist/integral.hpp"
#include "mshist/io.hpp"
#include "mshist/metrics.hpp"
#include "mshist/parallel.hpp"
#include "mshist/tonemap.hpp"
