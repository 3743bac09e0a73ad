// Umbrella header: exact conditional likelihood ratios for hidden states
// of a finite-state HMM, weak-signal expansions, contraction diagnostics,
// and the oracle FDR-optimal multiple-testing procedure.
#pragma once

#include "hmmfdr/diagnostics.hpp"
#include "hmmfdr/expansion.hpp"
#include "hmmfdr/hmm.hpp"
#include "hmmfdr/io.hpp"
#include "hmmfdr/likelihood.hpp"
#include "hmmfdr/matrix.hpp"
#include "hmmfdr/models.hpp"
#include "hmmfdr/rng.hpp"
#include "hmmfdr/testing.hpp"
#include "hmmfdr/util.hpp"
