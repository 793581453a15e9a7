// advsp/advsp.hpp
// Umbrella header.

#ifndef ADVSP_ADVSP_HPP
#define ADVSP_ADVSP_HPP

#include "advsp/attack.hpp"
#include "advsp/audio.hpp"
#include "advsp/corpus.hpp"
#include "advsp/cramer.hpp"
#include "advsp/ctc.hpp"
#include "advsp/frontend.hpp"
#include "advsp/harness.hpp"
#include "advsp/metrics_edit.hpp"
#include "advsp/metrics_quality.hpp"
#include "advsp/ota.hpp"
#include "advsp/report.hpp"
#include "advsp/rng.hpp"
#include "advsp/train.hpp"
#include "advsp/victim.hpp"

#endif  // ADVSP_ADVSP_HPP
