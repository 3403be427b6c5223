#include "stagehand/holefill.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <limits>

#include <unistd.h>

#include "stagehand/png_io.hpp"

namespace stagehand {

std::size_t HoleMask::count() const {
  return static_cast<std::size_t>(std::count(mask.begin(), mask.end(), 1));
}

void PostFillConfig::validate() const {
  if (contrast_background &&
      (!contrast_background->allFinite() || (contrast_background->array() < 0.0).any() ||
       (contrast_background->array() > 1.0).any()))
    throw ValidationError("postfill: contrast background must lie in [0, 1]");
  if (!(alpha_hole_threshold >= 0.0 && alpha_hole_threshold <= 1.0))
    throw ValidationError("postfill: alpha_hole_threshold must lie in [0, 1]");
  if (dilation_radius < 0) throw ValidationError("postfill: dilation_radius must be >= 0");
  if (lift_stride < 1) throw ValidationError("postfill: lift_stride must be >= 1");
  if (inpaint_method == InpaintMethod::external && external_command.empty())
    throw ValidationError("postfill: external inpainting needs a command");
}

Vec3 pick_contrast_background(const ImageBuffer& frame) {
  constexpr int kBins = 64;
  std::vector<std::uint8_t> hist(kBins * kBins * kBins, 0);
  auto bin = [](float c) { return std::clamp(static_cast<int>(c * kBins), 0, kBins - 1); };
  for (std::size_t i = 0; i < frame.pixel_count(); ++i) {
    if (frame.alpha[i] < 0.5f) continue;
    hist[(bin(frame.color[3 * i]) * kBins + bin(frame.color[3 * i + 1])) * kBins +
         bin(frame.color[3 * i + 2])] = 1;
  }

  std::array<double, 8> nearest;
  nearest.fill(std::numeric_limits<double>::infinity());
  for (int r = 0; r < kBins; ++r)
    for (int g = 0; g < kBins; ++g)
      for (int b = 0; b < kBins; ++b) {
        if (!hist[(r * kBins + g) * kBins + b]) continue;
        const Vec3 center((r + 0.5) / kBins, (g + 0.5) / kBins, (b + 0.5) / kBins);
        for (int c = 0; c < 8; ++c) {
          const Vec3 corner((c >> 2) & 1, (c >> 1) & 1, c & 1);
          nearest[c] = std::min(nearest[c], (center - corner).squaredNorm());
        }
      }

  int best = 0;
  for (int c = 1; c < 8; ++c)
    if (nearest[c] > nearest[best]) best = c;
  return {static_cast<double>((best >> 2) & 1), static_cast<double>((best >> 1) & 1),
          static_cast<double>(best & 1)};
}

HoleMask detect_holes(const ImageBuffer& frame, const Vec3& background, double alpha_threshold) {
  HoleMask m(frame.width, frame.height);
  constexpr double kColorTolerance = 2.0 / 255.0;
  for (std::size_t i = 0; i < frame.pixel_count(); ++i) {
    bool hole = frame.alpha[i] < alpha_threshold;
    if (!hole) {
      hole = std::abs(frame.color[3 * i] - background.x()) <= kColorTolerance &&
             std::abs(frame.color[3 * i + 1] - background.y()) <= kColorTolerance &&
             std::abs(frame.color[3 * i + 2] - background.z()) <= kColorTolerance;
    }
    m.mask[i] = hole ? 1 : 0;
  }
  return m;
}

HoleMask detect_holes(const ImageBuffer& frame, const PostFillConfig& cfg) {
  const Vec3 bg = cfg.contrast_background ? *cfg.contrast_background : pick_contrast_background(frame);
  return detect_holes(frame, bg, cfg.alpha_hole_threshold);
}

HoleMask dilate(const HoleMask& mask, int radius) {
  if (radius < 0) throw ValidationError("dilate: radius must be >= 0");
  if (radius == 0) return mask;
  std::vector<int> half_width(2 * radius + 1);
  for (int dy = -radius; dy <= radius; ++dy)
    half_width[dy + radius] = static_cast<int>(std::floor(std::sqrt(double(radius * radius - dy * dy))));

  HoleMask out(mask.width, mask.height);
  for (int v = 0; v < mask.height; ++v)
    for (int u = 0; u < mask.width; ++u) {
      if (!mask.at(u, v)) continue;
      for (int dy = -radius; dy <= radius; ++dy) {
        const int y = v + dy;
        if (y < 0 || y >= mask.height) continue;
        const int hw = half_width[dy + radius];
        const int x0 = std::max(0, u - hw), x1 = std::min(mask.width - 1, u + hw);
        std::fill(out.mask.begin() + static_cast<std::ptrdiff_t>(y) * mask.width + x0,
                  out.mask.begin() + static_cast<std::ptrdiff_t>(y) * mask.width + x1 + 1, 1);
      }
    }
  return out;
}

namespace {

using Px = Eigen::Vector4f;  // r, g, b, depth

// Solves the Laplace equation on `unknown` pixels with the others as Dirichlet data and the
// image border as a zero-flux boundary. Unknown pixels are seeded from a half-resolution solve.
void harmonic_fill(std::vector<Px>& img, const std::vector<std::uint8_t>& unknown, int w, int h,
                   const HarmonicOptions& opts) {
  if (std::find(unknown.begin(), unknown.end(), 1) == unknown.end()) return;

  if (w > 1 || h > 1) {
    const int cw = (w + 1) / 2, ch = (h + 1) / 2;
    std::vector<Px> coarse(static_cast<std::size_t>(cw) * ch, Px::Zero());
    std::vector<std::uint8_t> coarse_unknown(coarse.size(), 1);
    for (int y = 0; y < ch; ++y)
      for (int x = 0; x < cw; ++x) {
        Px sum = Px::Zero();
        int n = 0;
        for (int dy = 0; dy < 2; ++dy)
          for (int dx = 0; dx < 2; ++dx) {
            const int fx = 2 * x + dx, fy = 2 * y + dy;
            if (fx >= w || fy >= h) continue;
            const std::size_t fi = static_cast<std::size_t>(fy) * w + fx;
            if (unknown[fi]) continue;
            sum += img[fi];
            ++n;
          }
        if (n > 0) {
          coarse[static_cast<std::size_t>(y) * cw + x] = sum / static_cast<float>(n);
          coarse_unknown[static_cast<std::size_t>(y) * cw + x] = 0;
        }
      }
    harmonic_fill(coarse, coarse_unknown, cw, ch, opts);
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        const std::size_t i = static_cast<std::size_t>(y) * w + x;
        if (unknown[i]) img[i] = coarse[static_cast<std::size_t>(y / 2) * cw + x / 2];
      }
  }

  std::vector<std::size_t> holes;
  for (std::size_t i = 0; i < unknown.size(); ++i)
    if (unknown[i]) holes.push_back(i);
  std::vector<Px> next(holes.size());
  for (int it = 0; it < opts.max_iterations; ++it) {
    float max_change = 0.0f;
    for (std::size_t k = 0; k < holes.size(); ++k) {
      const std::size_t i = holes[k];
      const int x = static_cast<int>(i % w), y = static_cast<int>(i / w);
      Px sum = Px::Zero();
      int n = 0;
      if (x > 0) sum += img[i - 1], ++n;
      if (x + 1 < w) sum += img[i + 1], ++n;
      if (y > 0) sum += img[i - w], ++n;
      if (y + 1 < h) sum += img[i + w], ++n;
      next[k] = n > 0 ? Px(sum / static_cast<float>(n)) : img[i];
      max_change = std::max(max_change, (next[k] - img[i]).cwiseAbs().maxCoeff());
    }
    for (std::size_t k = 0; k < holes.size(); ++k) img[holes[k]] = next[k];
    if (max_change < opts.tolerance) break;
  }
}

void check_mask(const ImageBuffer& frame, const HoleMask& mask) {
  if (mask.width != frame.width || mask.height != frame.height)
    throw ValidationError("inpaint: mask size does not match the frame");
  if (frame.pixel_count() > 0 && mask.count() == frame.pixel_count())
    throw ValidationError("inpaint: mask covers the entire frame");
}

}  // namespace

ImageBuffer inpaint(const ImageBuffer& frame, const HoleMask& mask, const HarmonicOptions& opts) {
  check_mask(frame, mask);
  ImageBuffer out = frame;
  if (mask.count() == 0) return out;

  std::vector<Px> px(frame.pixel_count());
  for (std::size_t i = 0; i < px.size(); ++i)
    px[i] = Px(frame.color[3 * i], frame.color[3 * i + 1], frame.color[3 * i + 2], frame.depth[i]);
  harmonic_fill(px, mask.mask, frame.width, frame.height, opts);

  for (std::size_t i = 0; i < px.size(); ++i) {
    if (!mask.mask[i]) continue;
    for (int c = 0; c < 3; ++c) out.color[3 * i + c] = std::clamp(px[i][c], 0.0f, 1.0f);
    out.depth[i] = px[i][3];
    out.alpha[i] = 1.0f;
  }
  return out;
}

ImageBuffer HarmonicInpainter::fill(const ImageBuffer& frame, const HoleMask& mask) const {
  return inpaint(frame, mask, opts_);
}

ImageBuffer ExternalInpainter::fill(const ImageBuffer& frame, const HoleMask& mask) const {
  check_mask(frame, mask);
  ImageBuffer out = inpaint(frame, mask);
  if (mask.count() == 0) return out;

  static std::atomic<int> counter{0};
  const auto dir = std::filesystem::temp_directory_path() /
                   ("stagehand_inpaint_" + std::to_string(::getpid()) + "_" +
                    std::to_string(counter.fetch_add(1)));
  std::filesystem::create_directories(dir);
  const auto frame_path = dir / "frame.png";
  const auto mask_path = dir / "mask.png";
  const auto out_path = dir / "out.png";

  Rgb8Image rgb{frame.width, frame.height, std::vector<std::uint8_t>(3 * frame.pixel_count())};
  for (std::size_t i = 0; i < rgb.pixels.size(); ++i)
    rgb.pixels[i] = static_cast<std::uint8_t>(std::lround(std::clamp(frame.color[i], 0.0f, 1.0f) * 255.0f));
  write_png_rgb(frame_path, rgb);
  write_png_mask(mask_path, mask.width, mask.height, mask.mask);

  std::string cmd = command_;
  auto substitute = [&cmd](const std::string& key, const std::string& value) {
    for (std::size_t pos; (pos = cmd.find(key)) != std::string::npos;)
      cmd.replace(pos, key.size(), "'" + value + "'");
  };
  substitute("{frame}", frame_path.string());
  substitute("{mask}", mask_path.string());
  substitute("{out}", out_path.string());

  const int status = std::system(cmd.c_str());
  if (status != 0) {
    std::filesystem::remove_all(dir);
    throw Error("inpaint: external command failed with status " + std::to_string(status));
  }
  Rgb8Image result;
  try {
    result = read_png_rgb(out_path);
  } catch (...) {
    std::filesystem::remove_all(dir);
    throw;
  }
  std::filesystem::remove_all(dir);
  if (result.width != frame.width || result.height != frame.height)
    throw Error("inpaint: external command produced an image of the wrong size");

  for (std::size_t i = 0; i < frame.pixel_count(); ++i) {
    if (!mask.mask[i]) continue;
    for (int c = 0; c < 3; ++c) out.color[3 * i + c] = result.pixels[3 * i + c] / 255.0f;
  }
  return out;
}

std::unique_ptr<Inpainter> make_inpainter(const PostFillConfig& cfg) {
  if (cfg.inpaint_method == InpaintMethod::external)
    return std::make_unique<ExternalInpainter>(cfg.external_command);
  return std::make_unique<HarmonicInpainter>();
}

GaussianField lift_inpainted(const ImageBuffer& frame, const HoleMask& mask,
                             const CameraIntrinsics& K, const CameraPose& pose, int stride) {
  if (stride < 1) throw ValidationError("lift: stride must be >= 1");
  if (mask.width != frame.width || mask.height != frame.height)
    throw ValidationError("lift: mask size does not match the frame");
  constexpr double kLiftedOpacity = 0.9;
  std::vector<GaussianPrimitive> out;
  for (int v = 0; v < frame.height; v += stride)
    for (int u = 0; u < frame.width; u += stride) {
      if (!mask.at(u, v)) continue;
      const double d = frame.depth[frame.index(u, v)];
      if (!(d > 0.0) || !std::isfinite(d)) continue;
      const double sigma = d / K.fy * stride / 2.0;
      const Eigen::Vector3f c = frame.rgb(u, v);
      out.push_back(make_primitive(backproject(K, pose, u, v, d), Vec3::Constant(sigma),
                                   Quat::Identity(), kLiftedOpacity, c.cast<double>()));
    }
  return GaussianField(std::move(out), 0);
}

PostFillResult postfill_sequence(std::span<const FusedFrame> fused_frames,
                                 const Trajectory& trajectory, const PostFillConfig& cfg,
                                 const RenderConfig& render_cfg) {
  cfg.validate();
  render_cfg.validate();
  if (fused_frames.size() != trajectory.size())
    throw ValidationError("postfill: frame count does not match the trajectory length");

  const std::unique_ptr<Inpainter> inpainter = make_inpainter(cfg);
  PostFillResult result;
  std::vector<GaussianPrimitive> lifted;

  for (std::size_t i = 0; i < fused_frames.size(); ++i) {
    const Camera& cam = trajectory[i];
    FusedFrame frame = fused_frames[i];
    if (!lifted.empty()) frame = append(frame, GaussianField(lifted, 0), Provenance::lifted);

    ImageBuffer plain = render(frame.field, cam, render_cfg);
    PostFillFrameReport report;
    report.contrast_background = cfg.contrast_background ? *cfg.contrast_background
                                                         : pick_contrast_background(plain);
    RenderConfig contrast_cfg = render_cfg;
    contrast_cfg.background_color = report.contrast_background;
    const ImageBuffer probe = render(frame.field, cam, contrast_cfg);

    const HoleMask holes = detect_holes(probe, report.contrast_background, cfg.alpha_hole_threshold);
    const double total = static_cast<double>(probe.pixel_count());
    report.hole_fraction_before = holes.count() / total;
    HoleMask mask = dilate(holes, cfg.dilation_radius);
    report.masked_pixels = mask.count();

    if (report.masked_pixels == 0) {
      report.hole_fraction_after = 0.0;
      result.frames.push_back(std::move(plain));
      result.masks.push_back(std::move(mask));
      result.reports.push_back(report);
      continue;
    }

    // Fill from foreground colors so half-covered pixels at the mask edge don't carry the
    // contrast color into the hole.
    ImageBuffer source = probe;
    for (std::size_t p = 0; p < source.pixel_count(); ++p) {
      const float a = source.alpha[p];
      if (a <= 0.0f) continue;
      for (int c = 0; c < 3; ++c) {
        const float bg = static_cast<float>(report.contrast_background[c]);
        source.color[3 * p + c] = std::clamp((source.color[3 * p + c] - (1.0f - a) * bg) / a, 0.0f, 1.0f);
      }
    }
    const ImageBuffer filled = inpainter->fill(source, mask);
    if (cfg.lift_to_3d) {
      const GaussianField new_prims = lift_inpainted(filled, mask, cam.intrinsics, cam.pose, cfg.lift_stride);
      report.lifted_primitives = new_prims.size();
      lifted.insert(lifted.end(), new_prims.begin(), new_prims.end());
      frame = append(frame, new_prims, Provenance::lifted);
      plain = render(frame.field, cam, render_cfg);
    }

    ImageBuffer check = probe;
    for (std::size_t p = 0; p < mask.mask.size(); ++p) {
      if (!mask.mask[p]) continue;
      for (int c = 0; c < 3; ++c) {
        plain.color[3 * p + c] = filled.color[3 * p + c];
        check.color[3 * p + c] = filled.color[3 * p + c];
      }
      plain.alpha[p] = check.alpha[p] = filled.alpha[p];
      plain.depth[p] = check.depth[p] = filled.depth[p];
    }
    report.hole_fraction_after =
        detect_holes(check, report.contrast_background, cfg.alpha_hole_threshold).count() / total;

    result.frames.push_back(std::move(plain));
    result.masks.push_back(std::move(mask));
    result.reports.push_back(report);
  }
  result.lifted = GaussianField(std::move(lifted), 0);
  return result;
}

}  // namespace stagehand
