#pragma once

#include "qpkr/core.hpp"
#include "qpkr/fft.hpp"
#include "qpkr/parallel.hpp"
#include "qpkr/stats.hpp"
#include "qpkr/quantum.hpp"
#include "qpkr/classical.hpp"
#include "qpkr/anderson.hpp"
#include "qpkr/analysis.hpp"
#include "qpkr/io.hpp"
#include "qpkr/config.hpp"
#include "qpkr/harness.hpp"
