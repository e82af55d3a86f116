#pragma once

#include "spectail/error.hpp"
#include "spectail/random.hpp"
#include "spectail/stats.hpp"
#include "spectail/parallel.hpp"
#include "spectail/distributions.hpp"
#include "spectail/series.hpp"
#include "spectail/models.hpp"
#include "spectail/estimators.hpp"
#include "spectail/bootstrap.hpp"
#include "spectail/truth.hpp"
#include "spectail/asymptotics.hpp"
#include "spectail/study.hpp"
#include "spectail/report.hpp"
#include "spectail/config_io.hpp"
