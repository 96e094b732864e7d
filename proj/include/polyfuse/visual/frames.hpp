#pragma once

#include <filesystem>
#include <vector>

#include "polyfuse/nn/conv3d.hpp"
#include "polyfuse/visual/video.hpp"

namespace polyfuse::visual {

struct ClipGeometry {
  int frames = 16;
  int height = 64;
  int width = 64;

  bool operator==(const ClipGeometry&) const = default;
};

/// time × height × width × 3 values in [0, 1], interleaved RGB.
struct FrameTensor {
  ClipGeometry geometry;
  std::vector<float> values;

  float at(int t, int y, int x, int c) const {
    return values[((static_cast<std::size_t>(t) * geometry.height + y) * geometry.width + x) * 3 + c];
  }
  /// Mean over all entries of frame t.
  double frame_mean(int t) const;
  /// Channels-first layout used by the convolutional model.
  nn::Volume<float> to_volume() const;
};

/// Timestamps start + (end − start)(i + 0.5)/T for i < T.
std::vector<double> sample_times(double start, double end, int count);

/// Samples T frames uniformly in [start, end), takes the nearest decoded frame
/// for each, center-crops to a square, resizes to H × W and scales to [0, 1].
/// Throws WindowOutOfRange, DecodeFailure or MissingMedia.
FrameTensor sample_frames(VideoSource& video, double start, double end, const ClipGeometry& geometry = {});
FrameTensor sample_frames(const std::filesystem::path& video, double start, double end,
                          const ClipGeometry& geometry = {});

}  // namespace polyfuse::visual
