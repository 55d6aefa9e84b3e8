#pragma once

#include "hwvar/errors.hpp"
#include "hwvar/haar.hpp"
#include "hwvar/inversion.hpp"
#include "hwvar/normal.hpp"
#include "hwvar/oracle.hpp"
#include "hwvar/parallel.hpp"
#include "hwvar/portfolio.hpp"
#include "hwvar/risk.hpp"
#include "hwvar/vasicek.hpp"
