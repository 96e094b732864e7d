#include "polyfuse/audio/wav.hpp"

#include <cmath>
#include <cstdint>
#include <cstring>

#include "polyfuse/core/error.hpp"
#include "polyfuse/core/tensor_file.hpp"

namespace polyfuse::audio {

namespace fs = std::filesystem;

bool supported_sample_rate(int rate) noexcept {
  return rate == 8000 || rate == 16000 || rate == 44100 || rate == 48000;
}

namespace {

template <class T>
T read_le(const std::string& bytes, std::size_t at) {
  T v;
  std::memcpy(&v, bytes.data() + at, sizeof(T));
  return v;
}

template <class T>
void put_le(std::string& out, T v) {
  out.append(reinterpret_cast<const char*>(&v), sizeof(T));
}

}  // namespace

AudioSignal read_wav(const fs::path& path) {
  if (!fs::exists(path)) throw Error(ErrorCode::MissingMedia, "audio file not found: " + path.string());
  const std::string bytes = read_file(path);
  auto fail = [&](const std::string& why) { return Error(ErrorCode::DecodeFailure, path.string() + ": " + why); };
  if (bytes.size() < 12 || bytes.compare(0, 4, "RIFF") != 0 || bytes.compare(8, 4, "WAVE") != 0)
    throw fail("not a RIFF/WAVE file");

  std::uint16_t format = 0, channels = 0, bits = 0;
  std::uint32_t rate = 0;
  std::size_t data_at = 0, data_size = 0;
  bool have_fmt = false;
  for (std::size_t at = 12; at + 8 <= bytes.size();) {
    const std::string id = bytes.substr(at, 4);
    const auto size = static_cast<std::size_t>(read_le<std::uint32_t>(bytes, at + 4));
    const std::size_t body = at + 8;
    if (body + size > bytes.size() && id != "data") throw fail("truncated chunk " + id);
    if (id == "fmt ") {
      if (size < 16) throw fail("short fmt chunk");
      format = read_le<std::uint16_t>(bytes, body);
      channels = read_le<std::uint16_t>(bytes, body + 2);
      rate = read_le<std::uint32_t>(bytes, body + 4);
      bits = read_le<std::uint16_t>(bytes, body + 14);
      if (format == 0xFFFE && size >= 26) format = read_le<std::uint16_t>(bytes, body + 24);  // extensible
      have_fmt = true;
    } else if (id == "data") {
      data_at = body;
      data_size = std::min(size, bytes.size() - body);
      break;
    }
    at = body + size + (size & 1);
  }
  if (!have_fmt || data_at == 0) throw fail("missing fmt or data chunk");
  if (channels == 0) throw fail("zero channels");
  if (!supported_sample_rate(static_cast<int>(rate))) throw fail("unsupported sample rate " + std::to_string(rate));
  const bool pcm16 = format == 1 && bits == 16;
  const bool float32 = format == 3 && bits == 32;
  if (!pcm16 && !float32) throw fail("unsupported sample format (need 16-bit PCM or 32-bit float)");

  const std::size_t width = bits / 8;
  const std::size_t frames = data_size / (width * channels);
  AudioSignal signal;
  signal.sample_rate = static_cast<int>(rate);
  signal.samples.resize(frames);
  for (std::size_t i = 0; i < frames; ++i) {
    double acc = 0.0;
    for (std::size_t c = 0; c < channels; ++c) {
      const std::size_t at = data_at + (i * channels + c) * width;
      acc += pcm16 ? read_le<std::int16_t>(bytes, at) / 32768.0 : static_cast<double>(read_le<float>(bytes, at));
    }
    const double v = acc / channels;
    if (!std::isfinite(v)) throw fail("non-finite sample at " + std::to_string(i));
    signal.samples[i] = v;
  }
  return signal;
}

std::string encode_wav(const AudioSignal& signal) {
  const auto n = static_cast<std::uint32_t>(signal.samples.size());
  std::string out;
  out += "RIFF";
  put_le<std::uint32_t>(out, 36 + 2 * n);
  out += "WAVEfmt ";
  put_le<std::uint32_t>(out, 16);
  put_le<std::uint16_t>(out, 1);
  put_le<std::uint16_t>(out, 1);
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(signal.sample_rate));
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(signal.sample_rate) * 2);
  put_le<std::uint16_t>(out, 2);
  put_le<std::uint16_t>(out, 16);
  out += "data";
  put_le<std::uint32_t>(out, 2 * n);
  for (double s : signal.samples) {
    const double clipped = std::clamp(s, -1.0, 1.0);
    put_le<std::int16_t>(out, static_cast<std::int16_t>(std::lround(clipped * 32767.0)));
  }
  return out;
}

void write_wav(const fs::path& path, const AudioSignal& signal) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  write_file_atomic(path, encode_wav(signal));
}

AudioSignal slice(const AudioSignal& signal, double start, double end) {
  const double total = signal.duration();
  const double slack = 1.0 / signal.sample_rate;
  if (start < 0.0 || end <= start || end > total + slack)
    throw Error(ErrorCode::WindowOutOfRange, "audio window [" + std::to_string(start) + ", " + std::to_string(end) +
                                                 ") outside signal of " + std::to_string(total) + " s");
  const auto first = static_cast<std::size_t>(std::lround(start * signal.sample_rate));
  const auto last = std::min(signal.samples.size(), static_cast<std::size_t>(std::lround(end * signal.sample_rate)));
  AudioSignal out;
  out.sample_rate = signal.sample_rate;
  out.samples.assign(signal.samples.begin() + static_cast<long>(first), signal.samples.begin() + static_cast<long>(last));
  return out;
}

}  // namespace polyfuse::audio
