#pragma once

// Everything except the command-line layer (latent_evi/cli.hpp).

#include "latent_evi/bss.hpp"
#include "latent_evi/check.hpp"
#include "latent_evi/csv.hpp"
#include "latent_evi/errors.hpp"
#include "latent_evi/evt.hpp"
#include "latent_evi/experiments.hpp"
#include "latent_evi/report.hpp"
#include "latent_evi/rng.hpp"
#include "latent_evi/rolling.hpp"
#include "latent_evi/scenario.hpp"
#include "latent_evi/simulate.hpp"
