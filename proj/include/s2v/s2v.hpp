#pragma once

#include "s2v/bench.hpp"
#include "s2v/error.hpp"
#include "s2v/image.hpp"
#include "s2v/matching.hpp"
#include "s2v/metaimage.hpp"
#include "s2v/mrf.hpp"
#include "s2v/nelder_mead.hpp"
#include "s2v/parallel.hpp"
#include "s2v/phantom.hpp"
#include "s2v/pyramid.hpp"
#include "s2v/random.hpp"
#include "s2v/registration.hpp"
#include "s2v/rigid.hpp"
#include "s2v/slice_cost.hpp"
