#ifndef BOOLKIT_BOOLKIT_HPP
#define BOOLKIT_BOOLKIT_HPP

#include "boolkit/allocation.hpp"
#include "boolkit/checkpoint.hpp"
#include "boolkit/config.hpp"
#include "boolkit/corpus.hpp"
#include "boolkit/data.hpp"
#include "boolkit/distill.hpp"
#include "boolkit/linear.hpp"
#include "boolkit/logic.hpp"
#include "boolkit/model.hpp"
#include "boolkit/optim.hpp"
#include "boolkit/svid.hpp"
#include "boolkit/tensor.hpp"
#include "boolkit/train.hpp"

#endif
