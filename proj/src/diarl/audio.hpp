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

#pragma once

#include <cstdint>
#include <deque>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "diarl/features.hpp"

namespace diarl {

// Incremental reader for 16 kHz mono s16le PCM, either headerless or in a
// WAV container. A stream whose first four bytes are "RIFF" is parsed as WAV
// and any other format is rejected; everything else is raw PCM.
class PcmDecoder {
 public:
  // Feeds bytes; appends whole decoded samples to `out`.
  void feed(std::span<const std::uint8_t> bytes, std::vector<std::int16_t>& out);
  bool is_wav() const { return mode_ == Mode::kWav; }

 private:
  enum class Mode { kDetect, kWavHeader, kWav, kRaw };
  void parse_header();
  void drain_samples(std::vector<std::int16_t>& out);

  Mode mode_ = Mode::kDetect;
  std::vector<std::uint8_t> pending_;
  std::uint64_t data_left_ = 0;  // bytes left in the WAV data chunk
};

std::vector<std::int16_t> read_pcm_file(const std::string& path);
void write_wav_file(const std::string& path, std::span<const std::int16_t> samples);

// Cuts a sample stream into overlapping fixed-length segments with
// monotone ids. A trailing partial segment is never emitted.
class Segmenter {
 public:
  explicit Segmenter(const FeatureConfig& cfg, std::int64_t first_id = 0);

  void push(std::span<const std::int16_t> samples);
  std::optional<AudioSegment> next();

  std::int64_t next_id() const { return next_id_; }
  std::vector<std::int16_t> buffered() const { return {buffer_.begin(), buffer_.end()}; }
  void restore(std::int64_t next_id, std::span<const std::int16_t> buffered);

 private:
  int seg_len_;
  int seg_hop_;
  double hop_s_;
  std::int64_t next_id_;
  std::deque<std::int16_t> buffer_;
};

}  // namespace diarl
