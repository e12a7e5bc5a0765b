#pragma once

// Everything except the pipeline driver and the file formats.

#include "pwlrom/core.hpp"
#include "pwlrom/fe/beam.hpp"
#include "pwlrom/fe/bonded.hpp"
#include "pwlrom/fe/modal.hpp"
#include "pwlrom/fe/system.hpp"
#include "pwlrom/integrate/adaptive.hpp"
#include "pwlrom/integrate/newmark.hpp"
#include "pwlrom/dmd/dmd.hpp"
#include "pwlrom/dmd/stability.hpp"
#include "pwlrom/rom/basis.hpp"
#include "pwlrom/rom/rom.hpp"
#include "pwlrom/analysis/bench.hpp"
#include "pwlrom/analysis/metrics.hpp"
#include "pwlrom/analysis/model.hpp"
#include "pwlrom/analysis/snapshots.hpp"
#include "pwlrom/analysis/spectra.hpp"
#include "pwlrom/analysis/sweep.hpp"
