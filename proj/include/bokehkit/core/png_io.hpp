#pragma once

#include <string>

#include "bokehkit/core/image.hpp"

namespace bokehkit {

/// Decode an 8- or 16-bit grayscale/RGB PNG into [0,1] planes.
/// Throws IoError (missing/unreadable file), FormatError (not a PNG,
/// unsupported depth or channel layout, corrupt stream).
Image load_image(const std::string& path);

/// Encode to PNG at the given bit depth with round-half-up quantization
/// of values clamped to [0,1].
void save_image(const Image& img, const std::string& path, int depth = 16);

}  // namespace bokehkit
