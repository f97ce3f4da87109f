#pragma once

#include "egd/chair.hpp"
#include "egd/decoding.hpp"
#include "egd/errors.hpp"
#include "egd/eval.hpp"
#include "egd/logit_lens.hpp"
#include "egd/numerics.hpp"
#include "egd/report.hpp"
#include "egd/toy_model.hpp"
#include "egd/trace_io.hpp"
