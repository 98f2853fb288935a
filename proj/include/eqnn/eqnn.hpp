#pragma once

#include "eqnn/capsule.hpp"
#include "eqnn/error.hpp"
#include "eqnn/feature_map.hpp"
#include "eqnn/gcnn.hpp"
#include "eqnn/geometry.hpp"
#include "eqnn/group.hpp"
#include "eqnn/intertwine.hpp"
#include "eqnn/io.hpp"
#include "eqnn/irreps.hpp"
#include "eqnn/isotypic.hpp"
#include "eqnn/layers.hpp"
#include "eqnn/linalg.hpp"
#include "eqnn/network.hpp"
#include "eqnn/rep_spec.hpp"
#include "eqnn/representation.hpp"
#include "eqnn/train.hpp"
#include "eqnn/verify.hpp"
