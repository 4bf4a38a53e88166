#pragma once

#include "sivmag/config.hpp"
#include "sivmag/error.hpp"
#include "sivmag/estimation.hpp"
#include "sivmag/field_inversion.hpp"
#include "sivmag/io.hpp"
#include "sivmag/least_squares.hpp"
#include "sivmag/sensitivity.hpp"
#include "sivmag/spectrum.hpp"
#include "sivmag/spin_model.hpp"
#include "sivmag/svg_plot.hpp"
#include "sivmag/units.hpp"
