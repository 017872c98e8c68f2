// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

#include "wsg/tensor.hpp"

namespace wsg {

/// Maps [-1,1] image values to bytes: round-half-up of 255*(v+1)/2, clamped.
std::vector<unsigned char> image_to_rgb8(const Tensor& img);

/// Writes an [N=1,3,H,W] image as 8-bit RGB PNG. Fixed encoder settings, so
/// identical tensors produce identical files.
void write_png_rgb8(const std::string& path, const Tensor& img);

}  // namespace wsg
