#pragma once

#include "evcrowd/annotations.hpp"
#include "evcrowd/error.hpp"
#include "evcrowd/evidential.hpp"
#include "evcrowd/file_io.hpp"
#include "evcrowd/grid.hpp"
#include "evcrowd/groundtruth.hpp"
#include "evcrowd/integral.hpp"
#include "evcrowd/multiscale.hpp"
#include "evcrowd/npy.hpp"
#include "evcrowd/parallel.hpp"
#include "evcrowd/report.hpp"
#include "evcrowd/rng.hpp"
#include "evcrowd/synth.hpp"
