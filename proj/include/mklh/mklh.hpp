#pragma once

#include "mklh/error.hpp"
#include "mklh/linalg3.hpp"
#include "mklh/imaging.hpp"
#include "mklh/image_io.hpp"
#include "mklh/parallel.hpp"
#include "mklh/transport.hpp"
#include "mklh/filter_io.hpp"
#include "mklh/oracle.hpp"
#include "mklh/diagnostics.hpp"
#include "mklh/predictor.hpp"
#include "mklh/dataset.hpp"
