#pragma once

#include "illg/amm.hpp"
#include "illg/config.hpp"
#include "illg/driver.hpp"
#include "illg/fem.hpp"
#include "illg/field.hpp"
#include "illg/mesh.hpp"
#include "illg/output.hpp"
#include "illg/tps.hpp"
