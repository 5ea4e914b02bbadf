#pragma once

#include "nci/core.hpp"
#include "nci/csv.hpp"
#include "nci/series.hpp"
#include "nci/corpus.hpp"
#include "nci/lanczos.hpp"
#include "nci/cohesion.hpp"
#include "nci/markets.hpp"
#include "nci/alignment.hpp"
#include "nci/econometrics.hpp"
#include "nci/plot.hpp"
#include "nci/pipeline.hpp"
