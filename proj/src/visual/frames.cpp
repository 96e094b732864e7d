#include "polyfuse/visual/frames.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include <opencv2/imgproc.hpp>

#include "polyfuse/core/error.hpp"

namespace polyfuse::visual {

double FrameTensor::frame_mean(int t) const {
  const std::size_t per = static_cast<std::size_t>(geometry.height) * geometry.width * 3;
  double s = 0.0;
  for (std::size_t i = 0; i < per; ++i) s += values[static_cast<std::size_t>(t) * per + i];
  return s / static_cast<double>(per);
}

nn::Volume<float> FrameTensor::to_volume() const {
  const Eigen::Index spatial = static_cast<Eigen::Index>(geometry.frames) * geometry.height * geometry.width;
  nn::Volume<float> v(3, spatial);
  for (Eigen::Index p = 0; p < spatial; ++p)
    for (int c = 0; c < 3; ++c) v(c, p) = values[static_cast<std::size_t>(p) * 3 + c];
  return v;
}

std::vector<double> sample_times(double start, double end, int count) {
  std::vector<double> t;
  for (int i = 0; i < count; ++i) t.push_back(start + (end - start) * (i + 0.5) / count);
  return t;
}

FrameTensor sample_frames(VideoSource& video, double start, double end, const ClipGeometry& geometry) {
  if (geometry.frames < 1 || geometry.height < 1 || geometry.width < 1)
    throw Error(ErrorCode::ConfigError, "clip geometry must be positive");
  const double slack = 1.0 / video.fps();
  if (start < 0.0 || end <= start || end > video.duration() + slack)
    throw Error(ErrorCode::WindowOutOfRange, "window [" + std::to_string(start) + ", " + std::to_string(end) +
                                                 ") outside video of " + std::to_string(video.duration()) + " s");
  std::vector<int> indices;
  for (double t : sample_times(start, end, geometry.frames))
    indices.push_back(std::clamp(static_cast<int>(std::lround(t * video.fps())), 0, video.frame_count() - 1));

  const int first = indices.front();
  const std::vector<RgbImage> decoded = video.read_frames(first, indices.back() - first + 1);

  FrameTensor out;
  out.geometry = geometry;
  out.values.reserve(static_cast<std::size_t>(geometry.frames) * geometry.height * geometry.width * 3);
  cv::Mat resized;
  for (int index : indices) {
    const RgbImage& img = decoded[static_cast<std::size_t>(index - first)];
    const int side = std::min(img.width, img.height);
    const cv::Mat full(img.height, img.width, CV_8UC3, const_cast<std::uint8_t*>(img.pixels.data()));
    const cv::Mat square = full(cv::Rect((img.width - side) / 2, (img.height - side) / 2, side, side));
    cv::resize(square, resized, cv::Size(geometry.width, geometry.height), 0, 0, cv::INTER_AREA);
    for (int r = 0; r < resized.rows; ++r) {
      const std::uint8_t* row = resized.ptr<std::uint8_t>(r);
      for (int k = 0; k < resized.cols * 3; ++k) out.values.push_back(static_cast<float>(row[k]) / 255.0f);
    }
  }
  return out;
}

FrameTensor sample_frames(const std::filesystem::path& video, double start, double end, const ClipGeometry& geometry) {
  auto source = open_video(video);
  return sample_frames(*source, start, end, geometry);
}

}  // namespace polyfuse::visual
