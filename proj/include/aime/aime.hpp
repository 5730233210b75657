#pragma once

#include "aime/aime_model.hpp"
#include "aime/cca.hpp"
#include "aime/config.hpp"
#include "aime/data_io.hpp"
#include "aime/errors.hpp"
#include "aime/importance.hpp"
#include "aime/matrix.hpp"
#include "aime/neural_net.hpp"
#include "aime/rng.hpp"
#include "aime/svg_plot.hpp"
#include "aime/synth.hpp"
