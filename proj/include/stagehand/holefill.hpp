#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "stagehand/compositor.hpp"
#include "stagehand/core.hpp"
#include "stagehand/render.hpp"

namespace stagehand {

struct HoleMask {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> mask;  // 1 = hole, row-major

  HoleMask() = default;
  HoleMask(int w, int h) : width(w), height(h), mask(static_cast<std::size_t>(w) * h, 0) {}

  bool at(int u, int v) const { return mask[static_cast<std::size_t>(v) * width + u] != 0; }
  void set(int u, int v, bool hole = true) {
    mask[static_cast<std::size_t>(v) * width + u] = hole ? 1 : 0;
  }
  std::size_t count() const;
  friend bool operator==(const HoleMask&, const HoleMask&) = default;
};

enum class InpaintMethod { harmonic, external };

struct PostFillConfig {
  // Clear color used to expose holes; picked per frame from the scene colors when empty.
  std::optional<Vec3> contrast_background;
  double alpha_hole_threshold = 0.05;
  int dilation_radius = 3;
  InpaintMethod inpaint_method = InpaintMethod::harmonic;
  // Command template for the external inpainter. {frame}, {mask} and {out} are replaced by PNG
  // paths; the command must write an RGB PNG of the same size to {out}.
  std::string external_command;
  bool lift_to_3d = false;
  int lift_stride = 2;

  void validate() const;
};

// Cube corner (index order r·4 + g·2 + b) farthest from the nearest covered-pixel color
// (alpha ≥ 0.5), measured on 64³ histogram bin centers. Ties go to the lower index.
Vec3 pick_contrast_background(const ImageBuffer& frame);

// Holes are pixels with alpha below the threshold or color within 2/255 of `background` on
// every channel.
HoleMask detect_holes(const ImageBuffer& frame, const Vec3& background, double alpha_threshold);
HoleMask detect_holes(const ImageBuffer& frame, const PostFillConfig& cfg);

// Dilation by the Euclidean disk {dx² + dy² ≤ r²}.
HoleMask dilate(const HoleMask& mask, int radius);

struct HarmonicOptions {
  float tolerance = 1e-4f;
  int max_iterations = 500;
};

// Harmonic (Laplace) fill of the masked pixels of color and depth, seeded coarse-to-fine.
// Unmasked pixels are returned bit-identical; filled pixels get alpha 1.
ImageBuffer inpaint(const ImageBuffer& frame, const HoleMask& mask, const HarmonicOptions& opts = {});

class Inpainter {
 public:
  virtual ~Inpainter() = default;
  virtual ImageBuffer fill(const ImageBuffer& frame, const HoleMask& mask) const = 0;
};

class HarmonicInpainter final : public Inpainter {
 public:
  explicit HarmonicInpainter(HarmonicOptions opts = {}) : opts_(opts) {}
  ImageBuffer fill(const ImageBuffer& frame, const HoleMask& mask) const override;

 private:
  HarmonicOptions opts_;
};

// Delegates color to an external image-in/image-out program. Depth in masked pixels comes from
// the harmonic fill so lifting still has support.
class ExternalInpainter final : public Inpainter {
 public:
  explicit ExternalInpainter(std::string command_template) : command_(std::move(command_template)) {}
  ImageBuffer fill(const ImageBuffer& frame, const HoleMask& mask) const override;

 private:
  std::string command_;
};

std::unique_ptr<Inpainter> make_inpainter(const PostFillConfig& cfg);

// One isotropic primitive per masked pixel on the stride lattice (u and v both multiples of
// `stride`), back-projected at its depth, σ = depth / fy · stride / 2, opacity 0.9.
GaussianField lift_inpainted(const ImageBuffer& frame, const HoleMask& mask,
                             const CameraIntrinsics& K, const CameraPose& pose, int stride);

struct PostFillFrameReport {
  double hole_fraction_before = 0.0;
  double hole_fraction_after = 0.0;
  std::size_t masked_pixels = 0;
  std::size_t lifted_primitives = 0;
  Vec3 contrast_background = Vec3::Zero();
};

struct PostFillResult {
  std::vector<ImageBuffer> frames;
  std::vector<HoleMask> masks;  // dilated masks
  std::vector<PostFillFrameReport> reports;
  // Lifted primitives accumulated across the sequence (empty unless lift_to_3d).
  GaussianField lifted;
};

// Per frame: render over the contrast color, detect, dilate, inpaint, optionally lift, then
// composite the inpainted pixels into a render over `render_cfg.background_color`. With lifting,
// lifted primitives are carried into every later frame, so frames run in order.
PostFillResult postfill_sequence(std::span<const FusedFrame> fused_frames,
                                 const Trajectory& trajectory, const PostFillConfig& cfg,
                                 const RenderConfig& render_cfg);

}  // namespace stagehand
