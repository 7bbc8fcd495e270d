#pragma once

#include "msd/analytic.hpp"
#include "msd/anomaly.hpp"
#include "msd/clustering.hpp"
#include "msd/density.hpp"
#include "msd/io.hpp"
#include "msd/parallel.hpp"
#include "msd/point_cloud.hpp"
#include "msd/rng.hpp"
#include "msd/shift.hpp"
#include "msd/stats.hpp"
#include "msd/synthetic.hpp"
#include "msd/theory_lab.hpp"
#include "msd/twosample.hpp"
#include "msd/experiments.hpp"
#include "msd/report.hpp"
