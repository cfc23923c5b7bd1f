#pragma once

#include "raterlab/aspects.hpp"
#include "raterlab/errors.hpp"
#include "raterlab/io.hpp"
#include "raterlab/llmclient.hpp"
#include "raterlab/llmscore.hpp"
#include "raterlab/pipeline.hpp"
#include "raterlab/predictions.hpp"
#include "raterlab/prompts.hpp"
#include "raterlab/rankeval.hpp"
#include "raterlab/rasch.hpp"
#include "raterlab/ratings.hpp"
#include "raterlab/reliability.hpp"
#include "raterlab/reports.hpp"
#include "raterlab/rng.hpp"
#include "raterlab/selection.hpp"
#include "raterlab/selfref.hpp"
#include "raterlab/synth.hpp"
#include "raterlab/writers.hpp"
