#pragma once

#include "codec.hpp"
#include "ddim.hpp"
#include "diagnostics.hpp"
#include "error.hpp"
#include "image.hpp"
#include "keying.hpp"
#include "latent.hpp"
#include "mask.hpp"
#include "pipeline.hpp"
#include "predictor.hpp"
#include "schedule.hpp"
