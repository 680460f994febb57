#pragma once

#include <filesystem>

#include "splatview/gaussian.h"

namespace splatview {

// Loads a trained splat scene from a binary little-endian PLY file.
//
// The vertex element must carry float32 properties x, y, z, f_dc_0..2,
// f_rest_0..N-1, opacity, scale_0..2 and rot_0..3 (w, x, y, z), in any order.
// Normals (nx, ny, nz) are skipped. The SH degree D is inferred from
// N = 3 * ((D + 1)^2 - 1); f_rest is stored channel-major, i.e. coefficient k
// of channel c lives at f_rest_{c * ((D + 1)^2 - 1) + k - 1}.
//
// Stored opacity, scale and rotation are pre-activation; the returned cloud
// holds activated values.
SplatCloud LoadSplatPly(const std::filesystem::path& path);

}  // namespace splatview
