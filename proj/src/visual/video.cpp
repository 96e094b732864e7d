#include "polyfuse/visual/video.hpp"

#include <opencv2/core.hpp>
#include <opencv2/imgproc.hpp>
#include <opencv2/videoio.hpp>

#include "polyfuse/core/error.hpp"

namespace polyfuse::visual {

namespace fs = std::filesystem;

std::string decoder_identity() { return "opencv-videoio-ffmpeg/" + std::string(CV_VERSION); }

namespace {

class OpenCvSource final : public VideoSource {
 public:
  explicit OpenCvSource(const fs::path& path) : path_(path) {
    if (!capture_.open(path.string(), cv::CAP_FFMPEG))
      throw Error(ErrorCode::DecodeFailure, "cannot open video " + path.string());
    fps_ = capture_.get(cv::CAP_PROP_FPS);
    count_ = static_cast<int>(capture_.get(cv::CAP_PROP_FRAME_COUNT));
    if (!(fps_ > 0.0) || count_ <= 0) throw Error(ErrorCode::DecodeFailure, "video has no frames: " + path.string());
  }

  double fps() const override { return fps_; }
  int frame_count() const override { return count_; }
  std::string identity() const override { return decoder_identity(); }

  std::vector<RgbImage> read_frames(int first, int count) override {
    if (first < 0 || count < 0 || first + count > count_)
      throw Error(ErrorCode::WindowOutOfRange, "frames [" + std::to_string(first) + ", " +
                                                   std::to_string(first + count) + ") outside " + path_.string());
    if (next_ != first) {
      if (!capture_.set(cv::CAP_PROP_POS_FRAMES, first))
        throw Error(ErrorCode::DecodeFailure, "cannot seek in " + path_.string());
      next_ = first;
    }
    std::vector<RgbImage> out;
    cv::Mat bgr, rgb;
    for (int i = 0; i < count; ++i) {
      if (!capture_.read(bgr) || bgr.empty())
        throw Error(ErrorCode::DecodeFailure, "decode failed at frame " + std::to_string(next_) + " of " + path_.string());
      ++next_;
      cv::cvtColor(bgr, rgb, cv::COLOR_BGR2RGB);
      RgbImage img{rgb.cols, rgb.rows, {}};
      img.pixels.resize(static_cast<std::size_t>(rgb.cols) * rgb.rows * 3);
      for (int r = 0; r < rgb.rows; ++r)
        std::copy(rgb.ptr<std::uint8_t>(r), rgb.ptr<std::uint8_t>(r) + rgb.cols * 3,
                  img.pixels.begin() + static_cast<long>(r) * rgb.cols * 3);
      out.push_back(std::move(img));
    }
    return out;
  }

 private:
  fs::path path_;
  cv::VideoCapture capture_;
  double fps_ = 0.0;
  int count_ = 0;
  int next_ = 0;
};

}  // namespace

std::unique_ptr<VideoSource> open_video(const fs::path& path) {
  if (!fs::exists(path)) throw Error(ErrorCode::MissingMedia, "video file not found: " + path.string());
  return std::make_unique<OpenCvSource>(path);
}

void write_video(const fs::path& path, const std::vector<RgbImage>& frames, double fps, VideoCodec codec) {
  if (frames.empty()) throw Error(ErrorCode::ValidationError, "no frames to write");
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  const cv::Size size(frames.front().width, frames.front().height);
  cv::VideoWriter writer(path.string(), cv::CAP_FFMPEG, codec == VideoCodec::lossless ? cv::VideoWriter::fourcc('F', 'F', 'V', '1') : cv::VideoWriter::fourcc('m', 'p', '4', 'v'), fps, size, true);
  if (!writer.isOpened()) throw Error(ErrorCode::IoError, "cannot write video " + path.string());
  cv::Mat bgr;
  for (const RgbImage& img : frames) {
    const cv::Mat rgb(img.height, img.width, CV_8UC3, const_cast<std::uint8_t*>(img.pixels.data()));
    cv::cvtColor(rgb, bgr, cv::COLOR_RGB2BGR);
    writer.write(bgr);
  }
}

}  // namespace polyfuse::visual
