#include <cstdio>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "stagehand/compositor.hpp"
#include "stagehand/demo.hpp"
#include "stagehand/holefill.hpp"
#include "stagehand/io.hpp"
#include "stagehand/occupancy.hpp"
#include "stagehand/pipeline.hpp"
#include "stagehand/placement.hpp"
#include "stagehand/render.hpp"
#include "stagehand/trajectory_gen.hpp"

namespace fs = std::filesystem;
using namespace stagehand;

namespace {

constexpr int kExitValidation = 2;
constexpr int kExitRuntime = 3;

Vec3 to_vec3(const std::vector<double>& v) { return {v[0], v[1], v[2]}; }

void write_json_file(const fs::path& path, const nlohmann::json& j) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << j.dump(2) << "\n";
}

struct PlaceArgs {
  std::string scene;
  std::vector<std::string> human;
  std::string trajectory;
  std::vector<double> bbox;
  std::string depth;
  double cell_size = 0.05;
  double padding = 0.1;
  double threshold = kDefaultDensityThreshold;
  PlacementConfig placement;
  std::vector<double> up{0.0, -1.0, 0.0};
  std::string out = "placement.json";
};

int run_place(const PlaceArgs& a) {
  const GaussianField scene = load_ply(a.scene);
  std::vector<GaussianField> human;
  for (const auto& h : a.human) human.push_back(load_ply(h));
  const Trajectory traj = load_trajectory(a.trajectory);
  const Camera& ref = traj[0];
  const DepthMap depth = a.depth.empty() ? render_depth_map(scene, ref.intrinsics, ref.pose, RenderConfig{})
                                         : load_depth(a.depth);
  const BBox2D box = a.bbox.empty() ? heuristic_bbox(ref.intrinsics.width, ref.intrinsics.height, depth)
                                    : BBox2D{a.bbox[0], a.bbox[1], a.bbox[2], a.bbox[3]};
  box.validate(ref.intrinsics.width, ref.intrinsics.height);
  PlacementConfig pc = a.placement;
  pc.up = to_vec3(a.up);
  pc.validate();
  const OccupancyGrid grid = build_grid(scene, a.cell_size, a.padding, a.threshold);
  const PlacementSolution sol = place_sequence(human, grid, ref.intrinsics, ref.pose, box, depth, pc);
  write_placement(sol, a.out);
  std::cout << "scale " << sol.scale << ", " << sol.anchor_points.size() << " anchors -> " << a.out << "\n";
  return 0;
}

struct RenderArgs {
  std::string scene;
  std::string trajectory;
  std::string out = "frames";
  std::vector<double> background{0.0, 0.0, 0.0};
  int tile_size = 16;
  int threads = 0;
  bool depth = false;
};

int run_render(const RenderArgs& a) {
  const GaussianField scene = load_ply(a.scene);
  const Trajectory traj = load_trajectory(a.trajectory);
  RenderConfig cfg;
  cfg.background_color = to_vec3(a.background);
  cfg.tile_size = a.tile_size;
  cfg.threads = a.threads;
  cfg.validate();
  std::vector<ImageBuffer> frames;
  for (const Camera& cam : traj) frames.push_back(render(scene, cam, cfg));
  write_frames(frames, a.out);
  if (a.depth) {
    for (std::size_t t = 0; t < traj.size(); ++t) {
      char name[32];
      std::snprintf(name, sizeof name, "depth_%04zu.pfm", t);
      write_depth(render_depth_map(scene, traj[t].intrinsics, traj[t].pose, cfg), fs::path(a.out) / name);
    }
  }
  std::cout << frames.size() << " frames -> " << a.out << "\n";
  return 0;
}

struct TrajectoryArgs {
  std::string kind = "static";
  int frames = 10;
  double magnitude = 0.0;
  std::vector<double> look_at{0.0, 0.0, 1.0};
  std::vector<double> intrinsics;
  std::vector<double> position{0.0, 0.0, 0.0};
  double rise = 0.5;
  std::vector<double> up{0.0, -1.0, 0.0};
  std::string out = "trajectory.json";
};

int run_trajectory(const TrajectoryArgs& a) {
  TrajectorySpec spec;
  const auto kind = parse_trajectory_kind(a.kind);
  if (!kind) throw ValidationError("unknown trajectory kind '" + a.kind + "'");
  spec.kind = *kind;
  spec.frames = a.frames;
  spec.magnitude = a.magnitude;
  spec.look_at = to_vec3(a.look_at);
  spec.intrinsics = {a.intrinsics[0], a.intrinsics[1], a.intrinsics[2], a.intrinsics[3],
                     static_cast<int>(a.intrinsics[4]), static_cast<int>(a.intrinsics[5])};
  spec.rise = a.rise;
  spec.up = to_vec3(a.up);
  const Vec3 pos = to_vec3(a.position);
  spec.base = CameraPose::from_rotation_translation(look_rotation(spec.look_at - pos, spec.up), pos);
  write_trajectory(generate(spec), a.out);
  std::cout << spec.frames << " poses -> " << a.out << "\n";
  return 0;
}

struct PostfillArgs {
  std::string scene;
  std::string trajectory;
  std::string out = "postfill";
  std::vector<double> background{0.0, 0.0, 0.0};
  std::vector<double> contrast;
  double alpha_threshold = 0.05;
  int dilation = 3;
  std::string inpaint = "harmonic";
  std::string external_command;
  bool lift = false;
  int lift_stride = 2;
};

int run_postfill(const PostfillArgs& a) {
  const GaussianField scene = load_ply(a.scene);
  const Trajectory traj = load_trajectory(a.trajectory);
  RenderConfig rc;
  rc.background_color = to_vec3(a.background);
  PostFillConfig pc;
  if (!a.contrast.empty()) pc.contrast_background = to_vec3(a.contrast);
  pc.alpha_hole_threshold = a.alpha_threshold;
  pc.dilation_radius = a.dilation;
  if (a.inpaint == "external")
    pc.inpaint_method = InpaintMethod::external;
  else if (a.inpaint != "harmonic")
    throw ValidationError("--inpaint must be harmonic or external");
  pc.external_command = a.external_command;
  pc.lift_to_3d = a.lift;
  pc.lift_stride = a.lift_stride;
  pc.validate();

  std::vector<FusedFrame> fused;
  for (std::size_t t = 0; t < traj.size(); ++t)
    fused.push_back({scene, static_cast<int>(t), std::vector<Provenance>(scene.size(), Provenance::scene)});
  const PostFillResult res = postfill_sequence(fused, traj, pc, rc);

  const fs::path out = a.out;
  write_frames(res.frames, out / "frames");
  fs::create_directories(out / "masks");
  nlohmann::json before = nlohmann::json::array();
  nlohmann::json after = nlohmann::json::array();
  for (std::size_t t = 0; t < res.masks.size(); ++t) {
    char name[32];
    std::snprintf(name, sizeof name, "mask_%04zu.png", t);
    write_mask(res.masks[t], out / "masks" / name);
    before.push_back(res.reports[t].hole_fraction_before);
    after.push_back(res.reports[t].hole_fraction_after);
  }
  write_json_file(out / "metrics.json", {{"hole_fraction_before", before}, {"hole_fraction_after", after}});
  for (std::size_t t = 0; t < res.reports.size(); ++t)
    std::cout << "frame " << t << ": holes " << res.reports[t].hole_fraction_before << " -> "
              << res.reports[t].hole_fraction_after << "\n";
  return 0;
}

int run_pipeline_command(const std::string& config, const std::string& output) {
  PipelineConfig cfg = load_pipeline_config(config);
  if (!output.empty()) cfg.output_dir = output;
  const PipelineResult res = run_pipeline(cfg);
  const MetricsReport& m = res.metrics;
  std::cout << "frames: " << res.frames.size() << " -> " << (cfg.output_dir / "frames").string() << "\n"
            << "scale: " << m.scale << "\n"
            << "avatar height: " << m.avatar_pixel_height << " px (box " << m.bbox.h << " px)\n";
  for (std::size_t t = 0; t < m.hole_fraction_before.size(); ++t)
    std::cout << "frame " << t << ": holes " << m.hole_fraction_before[t] << " -> " << m.hole_fraction_after[t]
              << "\n";
  for (const auto& s : m.stages) std::cout << "  " << s.stage << " " << s.seconds << " s\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Insert an animated Gaussian human into a Gaussian scene and render it along a camera path."};
  app.require_subcommand(1);

  std::string config_path;
  std::string pipeline_out;
  auto* pipeline = app.add_subcommand("pipeline", "Run load, placement, fusion, post-fill and write from a config file");
  pipeline->add_option("-c,--config", config_path, "JSON pipeline config")->required()->check(CLI::ExistingFile);
  pipeline->add_option("-o,--output", pipeline_out, "Override the config's output_dir");

  PlaceArgs place_args;
  auto* place = app.add_subcommand("place", "Solve per-frame anchors and scale for a human sequence");
  place->add_option("--scene", place_args.scene, "Scene PLY")->required();
  place->add_option("--human", place_args.human, "Human frame PLYs, in order")->required();
  place->add_option("--trajectory", place_args.trajectory, "Trajectory JSON; its first camera is the reference")
      ->required();
  place->add_option("--bbox", place_args.bbox, "Placement box x y w h in pixels (default: heuristic)")
      ->expected(4);
  place->add_option("--depth", place_args.depth, "Scene depth PFM (default: rendered from the scene)");
  place->add_option("--cell-size", place_args.cell_size, "Occupancy voxel size")->capture_default_str();
  place->add_option("--padding", place_args.padding, "Occupancy lattice padding")->capture_default_str();
  place->add_option("--threshold", place_args.threshold, "Occupancy density threshold")->capture_default_str();
  place->add_option("--samples", place_args.placement.baseline_samples, "Baseline depth samples")
      ->capture_default_str();
  place->add_option("--smoothing", place_args.placement.smoothing_weight, "Anchor smoothing weight in [0, 1]")
      ->capture_default_str();
  place->add_option("--smoothing-iterations", place_args.placement.smoothing_iterations, "Smoothing passes")
      ->capture_default_str();
  place->add_option("--up", place_args.up, "World up direction")->expected(3)->capture_default_str();
  place->add_option("-o,--out", place_args.out, "Output placement JSON")->capture_default_str();

  RenderArgs render_args;
  auto* render_cmd = app.add_subcommand("render", "Render a scene PLY along a trajectory to PNG frames");
  render_cmd->add_option("--scene", render_args.scene, "Scene PLY")->required();
  render_cmd->add_option("--trajectory", render_args.trajectory, "Trajectory JSON")->required();
  render_cmd->add_option("-o,--out", render_args.out, "Output directory")->capture_default_str();
  render_cmd->add_option("--background", render_args.background, "Background color r g b in [0, 1]")
      ->expected(3)->capture_default_str();
  render_cmd->add_option("--tile-size", render_args.tile_size, "Raster tile size in pixels")->capture_default_str();
  render_cmd->add_option("--threads", render_args.threads, "Worker threads (0: default)")->capture_default_str();
  render_cmd->add_flag("--depth", render_args.depth, "Also write depth_XXXX.pfm per frame");

  TrajectoryArgs traj_args;
  auto* traj = app.add_subcommand("trajectory", "Generate a camera trajectory JSON");
  traj->add_option("--kind", traj_args.kind, "static, dolly_in, dolly_out, truck, pan_orbit or spiral")
      ->capture_default_str();
  traj->add_option("--frames", traj_args.frames, "Number of poses")->capture_default_str();
  traj->add_option("--magnitude", traj_args.magnitude, "World units (dolly, truck) or degrees (orbit, spiral)")
      ->capture_default_str();
  traj->add_option("--look-at", traj_args.look_at, "Target point x y z")->expected(3)->capture_default_str();
  traj->add_option("--position", traj_args.position, "First camera position x y z")->expected(3)
      ->capture_default_str();
  traj->add_option("--intrinsics", traj_args.intrinsics, "fx fy cx cy width height")->expected(6)->required();
  traj->add_option("--rise", traj_args.rise, "Spiral rise along up, world units")->capture_default_str();
  traj->add_option("--up", traj_args.up, "World up direction")->expected(3)->capture_default_str();
  traj->add_option("-o,--out", traj_args.out, "Output trajectory JSON")->capture_default_str();

  PostfillArgs pf_args;
  auto* postfill = app.add_subcommand("postfill", "Detect and inpaint holes in renders of a scene along a trajectory");
  postfill->add_option("--scene", pf_args.scene, "Scene PLY")->required();
  postfill->add_option("--trajectory", pf_args.trajectory, "Trajectory JSON")->required();
  postfill->add_option("-o,--out", pf_args.out, "Output directory (frames/, masks/, metrics.json)")
      ->capture_default_str();
  postfill->add_option("--background", pf_args.background, "Final background color r g b")->expected(3)
      ->capture_default_str();
  postfill->add_option("--contrast", pf_args.contrast, "Hole-probe clear color r g b (default: picked per frame)")
      ->expected(3);
  postfill->add_option("--alpha-threshold", pf_args.alpha_threshold, "Alpha below which a pixel is a hole")
      ->capture_default_str();
  postfill->add_option("--dilation", pf_args.dilation, "Mask dilation radius in pixels")->capture_default_str();
  postfill->add_option("--inpaint", pf_args.inpaint, "harmonic or external")->capture_default_str();
  postfill->add_option("--external-command", pf_args.external_command,
                       "Inpainter command with {frame}, {mask} and {out} placeholders");
  postfill->add_flag("--lift", pf_args.lift, "Lift inpainted pixels into new primitives");
  postfill->add_option("--lift-stride", pf_args.lift_stride, "Pixel stride for lifted primitives")
      ->capture_default_str();

  std::string demo_dir = "demo";
  int demo_frames = 10;
  auto* demo = app.add_subcommand("demo", "Write the synthetic scene, human, trajectory and config fixtures");
  demo->add_option("-o,--out", demo_dir, "Output directory")->capture_default_str();
  demo->add_option("--frames", demo_frames, "Human and trajectory frame count")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitValidation;
  }

  try {
    if (*pipeline) return run_pipeline_command(config_path, pipeline_out);
    if (*place) return run_place(place_args);
    if (*render_cmd) return run_render(render_args);
    if (*traj) return run_trajectory(traj_args);
    if (*postfill) return run_postfill(pf_args);
    if (*demo) {
      demo::write_demo(demo_dir, demo_frames);
      std::cout << "demo fixtures -> " << demo_dir << " (run: stagehand pipeline -c "
                << (fs::path(demo_dir) / "config.json").string() << ")\n";
      return 0;
    }
  } catch (const StageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.is_validation() ? kExitValidation : kExitRuntime;
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << " (at " << e.element() << ")\n";
    return kExitValidation;
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return 0;
}
