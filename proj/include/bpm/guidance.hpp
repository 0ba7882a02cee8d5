// Copyright 2026 The BPM Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Masked classifier-free guidance: the instruction term is applied only
// inside the edit mask,
//
//   eps = eps_u + s_I (eps_i - eps_u) + s_T (eps_f - eps_i) * M
//
// where eps_u is unconditional, eps_i image-conditioned and eps_f conditioned
// on image and instruction. The mask must already be at the field's spatial
// resolution (latent-space callers downsample it first).

#pragma once

#include <cstdint>
#include <functional>
#include <string_view>
#include <vector>

#include "bpm/errors.hpp"
#include "bpm/geometry.hpp"

namespace bpm {

class NoiseField {
 public:
  NoiseField() = default;
  NoiseField(int channels, int height, int width, double fill = 0.0)
      : channels_(channels), height_(height), width_(width) {
    if (channels <= 0 || height <= 0 || width <= 0) {
      throw Error(ErrorKind::kShapeMismatch, "noise field dimensions must be > 0");
    }
    values_.assign(std::size_t(channels) * height * width, fill);
  }

  int channels() const noexcept { return channels_; }
  int height() const noexcept { return height_; }
  int width() const noexcept { return width_; }
  std::size_t size() const noexcept { return values_.size(); }

  double& at(int c, int y, int x) { return values_[index(c, y, x)]; }
  double at(int c, int y, int x) const { return values_[index(c, y, x)]; }
  std::vector<double>& values() noexcept { return values_; }
  const std::vector<double>& values() const noexcept { return values_; }

  bool same_shape(const NoiseField& o) const noexcept {
    return channels_ == o.channels_ && height_ == o.height_ && width_ == o.width_;
  }

  friend bool operator==(const NoiseField&, const NoiseField&) = default;

 private:
  std::size_t index(int c, int y, int x) const {
    return (std::size_t(c) * height_ + std::size_t(y)) * width_ + std::size_t(x);
  }

  int channels_ = 0;
  int height_ = 0;
  int width_ = 0;
  std::vector<double> values_;
};

inline NoiseField compose_guided_noise(const NoiseField& eps_uncond,
                                       const NoiseField& eps_img,
                                       const NoiseField& eps_full, double s_image,
                                       double s_text, const BinaryMask& mask) {
  if (!eps_uncond.same_shape(eps_img) || !eps_uncond.same_shape(eps_full)) {
    throw Error(ErrorKind::kShapeMismatch, "noise predictions differ in shape");
  }
  if (mask.width() != eps_uncond.width() || mask.height() != eps_uncond.height()) {
    throw Error(ErrorKind::kShapeMismatch, "mask does not match the field's H x W");
  }
  NoiseField out(eps_uncond.channels(), eps_uncond.height(), eps_uncond.width());
  for (int c = 0; c < out.channels(); ++c)
    for (int y = 0; y < out.height(); ++y)
      for (int x = 0; x < out.width(); ++x) {
        const double u = eps_uncond.at(c, y, x);
        const double i = eps_img.at(c, y, x);
        const double f = eps_full.at(c, y, x);
        const double m = mask.at(x, y) ? 1.0 : 0.0;
        out.at(c, y, x) = u + s_image * (i - u) + s_text * (f - i) * m;
      }
  return out;
}

struct GuidancePredictions {
  NoiseField uncond;
  NoiseField image_cond;
  NoiseField full_cond;
};

/// One denoiser evaluation: predictions for latent `z` at `step`, given the
/// conditioning image and instruction.
using DenoiserStep = std::function<GuidancePredictions(
    const NoiseField& z, int step, const NoiseField& origin, std::string_view instruction)>;

/// Second-round editing loop: z <- z - step_size * guided_noise(z), starting
/// from `origin`. Returns every state, origin first.
inline std::vector<NoiseField> stub_enhancement_loop(
    const DenoiserStep& denoiser, const NoiseField& origin,
    std::string_view instruction, const BinaryMask& mask, int steps,
    double s_image, double s_text, double step_size = 0.1) {
  if (steps < 0) throw Error(ErrorKind::kInvalidArgument, "steps must be >= 0");
  std::vector<NoiseField> trajectory{origin};
  trajectory.reserve(std::size_t(steps) + 1);
  for (int step = 0; step < steps; ++step) {
    const NoiseField& z = trajectory.back();
    const auto pred = denoiser(z, step, origin, instruction);
    const NoiseField eps = compose_guided_noise(pred.uncond, pred.image_cond,
                                                pred.full_cond, s_image, s_text, mask);
    NoiseField next = z;
    for (std::size_t k = 0; k < next.size(); ++k)
      next.values()[k] -= step_size * eps.values()[k];
    trajectory.push_back(std::move(next));
  }
  return trajectory;
}

/// Deterministic scalar in [-1, 1] derived from the instruction text (FNV-1a).
inline double instruction_signal(std::string_view instruction) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : instruction) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return double(h % 2001) / 1000.0 - 1.0;
}

/// Closed-form stand-in for a diffusion network:
///   uncond = a z,  image_cond = a z + b origin,  full_cond = image_cond + c t
/// with t = instruction_signal(instruction).
struct LinearStubDenoiser {
  double a = 0.5;
  double b = 0.25;
  double c = 1.0;

  GuidancePredictions operator()(const NoiseField& z, int, const NoiseField& origin,
                                 std::string_view instruction) const {
    if (!z.same_shape(origin)) throw Error(ErrorKind::kShapeMismatch, "stub denoiser");
    const double t = instruction_signal(instruction);
    GuidancePredictions p{z, z, z};
    for (std::size_t k = 0; k < z.size(); ++k) {
      const double zk = z.values()[k];
      p.uncond.values()[k] = a * zk;
      p.image_cond.values()[k] = a * zk + b * origin.values()[k];
      p.full_cond.values()[k] = p.image_cond.values()[k] + c * t;
    }
    return p;
  }
};

}  // namespace bpm
