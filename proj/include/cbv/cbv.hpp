#pragma once

#include "cbv/clearing.hpp"
#include "cbv/control.hpp"
#include "cbv/cut_engine.hpp"
#include "cbv/errors.hpp"
#include "cbv/fisher.hpp"
#include "cbv/network.hpp"
#include "cbv/observer.hpp"
#include "cbv/report_io.hpp"
#include "cbv/robustness.hpp"
#include "cbv/scl.hpp"
#include "cbv/types.hpp"
#include "cbv/validation.hpp"
