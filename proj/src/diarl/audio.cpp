/*
Copyright 2026 The diarl Authors

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
*/

#include "diarl/audio.hpp"

#include <cstring>
#include <fstream>
#include <iterator>

#include "diarl/error.hpp"

namespace diarl {

namespace {

std::uint32_t le32(const std::uint8_t* p) {
  return static_cast<std::uint32_t>(p[0]) | static_cast<std::uint32_t>(p[1]) << 8 |
         static_cast<std::uint32_t>(p[2]) << 16 | static_cast<std::uint32_t>(p[3]) << 24;
}
std::uint16_t le16(const std::uint8_t* p) {
  return static_cast<std::uint16_t>(p[0] | p[1] << 8);
}

void put32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}
void put16(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
}

}  // namespace

void PcmDecoder::feed(std::span<const std::uint8_t> bytes, std::vector<std::int16_t>& out) {
  pending_.insert(pending_.end(), bytes.begin(), bytes.end());
  if (mode_ == Mode::kDetect) {
    if (pending_.size() < 4) return;
    mode_ = std::memcmp(pending_.data(), "RIFF", 4) == 0 ? Mode::kWavHeader : Mode::kRaw;
  }
  if (mode_ == Mode::kWavHeader) parse_header();
  if (mode_ == Mode::kWav || mode_ == Mode::kRaw) drain_samples(out);
}

void PcmDecoder::parse_header() {
  // RIFF header then chunks; wait until the data chunk header is buffered.
  if (pending_.size() < 12) return;
  if (std::memcmp(pending_.data() + 8, "WAVE", 4) != 0) fail(ErrorCode::kInput, "not a WAVE file");
  std::size_t pos = 12;
  bool have_fmt = false;
  while (pos + 8 <= pending_.size()) {
    const std::uint8_t* chunk = pending_.data() + pos;
    const std::uint32_t size = le32(chunk + 4);
    if (std::memcmp(chunk, "data", 4) == 0) {
      if (!have_fmt) fail(ErrorCode::kInput, "WAV data chunk before fmt chunk");
      data_left_ = size;
      pending_.erase(pending_.begin(), pending_.begin() + static_cast<std::ptrdiff_t>(pos + 8));
      mode_ = Mode::kWav;
      return;
    }
    const std::size_t padded = size + (size & 1u);
    if (pos + 8 + padded > pending_.size()) return;
    if (std::memcmp(chunk, "fmt ", 4) == 0) {
      if (size < 16) fail(ErrorCode::kInput, "short WAV fmt chunk");
      const std::uint8_t* f = chunk + 8;
      const auto format = le16(f);
      const auto channels = le16(f + 2);
      const auto rate = le32(f + 4);
      const auto bits = le16(f + 14);
      if (format != 1 || channels != 1 || rate != static_cast<std::uint32_t>(kSampleRate) || bits != 16)
        fail(ErrorCode::kInput, "unsupported WAV format (need PCM mono 16 kHz 16-bit)");
      have_fmt = true;
    }
    pos += 8 + padded;
  }
}

void PcmDecoder::drain_samples(std::vector<std::int16_t>& out) {
  std::size_t usable = pending_.size() & ~std::size_t{1};
  if (mode_ == Mode::kWav) usable = std::min<std::uint64_t>(usable, data_left_ & ~std::uint64_t{1});
  for (std::size_t i = 0; i < usable; i += 2)
    out.push_back(static_cast<std::int16_t>(le16(pending_.data() + i)));
  if (mode_ == Mode::kWav) {
    data_left_ -= usable;
    // Anything after the data chunk is trailing metadata.
    if (data_left_ < 2) {
      pending_.clear();
      return;
    }
  }
  pending_.erase(pending_.begin(), pending_.begin() + static_cast<std::ptrdiff_t>(usable));
}

std::vector<std::int16_t> read_pcm_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::kIo, "cannot open " + path);
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  PcmDecoder decoder;
  std::vector<std::int16_t> samples;
  decoder.feed(bytes, samples);
  return samples;
}

void write_wav_file(const std::string& path, std::span<const std::int16_t> samples) {
  std::vector<std::uint8_t> out;
  const auto data_bytes = static_cast<std::uint32_t>(samples.size() * 2);
  out.insert(out.end(), {'R', 'I', 'F', 'F'});
  put32(out, 36 + data_bytes);
  out.insert(out.end(), {'W', 'A', 'V', 'E', 'f', 'm', 't', ' '});
  put32(out, 16);
  put16(out, 1);
  put16(out, 1);
  put32(out, kSampleRate);
  put32(out, kSampleRate * 2);
  put16(out, 2);
  put16(out, 16);
  out.insert(out.end(), {'d', 'a', 't', 'a'});
  put32(out, data_bytes);
  for (auto s : samples) put16(out, static_cast<std::uint16_t>(s));
  std::ofstream f(path, std::ios::binary);
  if (!f) fail(ErrorCode::kIo, "cannot write " + path);
  f.write(reinterpret_cast<const char*>(out.data()), static_cast<std::streamsize>(out.size()));
}

Segmenter::Segmenter(const FeatureConfig& cfg, std::int64_t first_id)
    : seg_len_(cfg.segment_samples()),
      seg_hop_(cfg.segment_hop_samples()),
      hop_s_(cfg.segment_hop_s),
      next_id_(first_id) {}

void Segmenter::push(std::span<const std::int16_t> samples) {
  buffer_.insert(buffer_.end(), samples.begin(), samples.end());
}

void Segmenter::restore(std::int64_t next_id, std::span<const std::int16_t> buffered) {
  next_id_ = next_id;
  buffer_.assign(buffered.begin(), buffered.end());
}

std::optional<AudioSegment> Segmenter::next() {
  if (static_cast<int>(buffer_.size()) < seg_len_) return std::nullopt;
  AudioSegment seg;
  seg.segment_id = next_id_++;
  seg.t0 = static_cast<double>(seg.segment_id) * hop_s_;
  seg.t1 = seg.t0 + static_cast<double>(seg_len_) / kSampleRate;
  seg.samples.assign(buffer_.begin(), buffer_.begin() + seg_len_);
  const auto drop = std::min<std::size_t>(static_cast<std::size_t>(seg_hop_), buffer_.size());
  buffer_.erase(buffer_.begin(), buffer_.begin() + static_cast<std::ptrdiff_t>(drop));
  return seg;
}

}  // namespace diarl
