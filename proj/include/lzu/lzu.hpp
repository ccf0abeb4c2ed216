// Copyright 2026 The lzu Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <lzu/core.hpp>
#include <lzu/error.hpp>
#include <lzu/grad.hpp>
#include <lzu/io.hpp>
#include <lzu/saliency.hpp>
#include <lzu/unzoom.hpp>
#include <lzu/zoom.hpp>
