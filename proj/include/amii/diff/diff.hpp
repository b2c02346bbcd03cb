// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "amii/diff/grad_check.hpp"
#include "amii/diff/ops.hpp"
#include "amii/diff/param.hpp"
#include "amii/diff/tape.hpp"
#include "amii/diff/tensor.hpp"
