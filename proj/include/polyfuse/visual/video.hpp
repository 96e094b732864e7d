#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

namespace polyfuse::visual {

/// 8-bit interleaved RGB image.
struct RgbImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;  // height × width × 3
};

/// Random-access view of a decoded video stream.
class VideoSource {
 public:
  virtual ~VideoSource() = default;
  virtual double fps() const = 0;
  virtual int frame_count() const = 0;
  /// Decodes frames[first … first + count) in order.
  virtual std::vector<RgbImage> read_frames(int first, int count) = 0;
  /// Decoder name and version, recorded in cache metadata.
  virtual std::string identity() const = 0;

  double duration() const { return frame_count() / fps(); }
};

/// Opens a video with the host decoder. Throws MissingMedia when the file is
/// absent and DecodeFailure when it cannot be decoded.
std::unique_ptr<VideoSource> open_video(const std::filesystem::path& path);

enum class VideoCodec {
  lossless,  // FFV1, so synthetic fixtures decode to the exact pixels written
  mpeg4,     // MPEG-4 Part 2, playable in browsers' media stacks
};

void write_video(const std::filesystem::path& path, const std::vector<RgbImage>& frames, double fps,
                 VideoCodec codec = VideoCodec::lossless);

std::string decoder_identity();

}  // namespace polyfuse::visual
