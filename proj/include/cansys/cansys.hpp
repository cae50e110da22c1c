#pragma once

#include "cansys/cli.hpp"
#include "cansys/config.hpp"
#include "cansys/grids.hpp"
#include "cansys/krein.hpp"
#include "cansys/mat2.hpp"
#include "cansys/model.hpp"
#include "cansys/rk.hpp"
#include "cansys/scatter.hpp"
#include "cansys/szego.hpp"
#include "cansys/transfer.hpp"
#include "cansys/weyl.hpp"
