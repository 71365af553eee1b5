#include "omniloc/augment.hpp"

#include <filesystem>
#include <map>

#include "json.hpp"
#include "omniloc/error.hpp"
#include "omniloc/formats.hpp"
#include "omniloc/image_io.hpp"
#include "omniloc/virtual_camera.hpp"

namespace omniloc {
namespace fs = std::filesystem;

RigidTransform crop_pose(const RigidTransform& ref_pose, const Rotation& rot) {
  return {ref_pose.rotation * rot.transpose(), ref_pose.translation};
}

CameraModel crop_camera(const DescriptorRequest& req, const Vc2Config& cfg, double crop_scale) {
  if (req.camera.rfind("cube_", 0) == 0) {
    const double half = cfg.face_px / 2.0;
    return PinholeModel(cfg.face_px, cfg.face_px, half, half, half, half);
  }
  return scale_model(find_preset(req.camera).model, crop_scale);
}

AugmentInventory plan_augmented_set(const SceneManifest& manifest, const Vc2Config& cfg) {
  AugmentInventory inv;
  for (const auto& ref : manifest.references) {
    const RigidTransform pose = ref.pose();
    inv.entries.push_back({ref.id, "360", "images/" + ref.id + fs::path(ref.image).extension().string(),
                           pose});
    ++inv.originals;
    for (const auto& req : reference_crops(ref.id, cfg)) {
      inv.entries.push_back({req.name, req.camera, "images/" + req.name + ".png",
                             crop_pose(pose, req.rotation)});
      ++inv.crops;
    }
  }
  return inv;
}

AugmentInventory emit_augmented_set(const SceneManifest& manifest, const AugmentOptions& opts,
                                    const std::string& out_dir) {
  const AugmentInventory inv = plan_augmented_set(manifest, opts.vc2);
  fs::create_directories(fs::path(out_dir) / "images");
  for (const auto& ref : manifest.references) {
    const fs::path dst = fs::path(out_dir) / "images" / (ref.id + fs::path(ref.image).extension().string());
    fs::copy_file(manifest.resolve(ref.image), dst, fs::copy_options::overwrite_existing);
    const auto crops = reference_crops(ref.id, opts.vc2);
    if (crops.empty()) continue;
    const RasterImage pano = read_image(manifest.resolve(ref.image));
    for (const auto& req : crops) {
      const CameraModel cam = crop_camera(req, opts.vc2, opts.crop_scale);
      const RasterImage img = extract_virtual(pano, cam, req.rotation, Sampler::kBilinear, opts.threads);
      write_image((fs::path(out_dir) / "images" / (req.name + ".png")).string(), img);
    }
  }
  write_text_file((fs::path(out_dir) / "labels.txt").string(), format_labels(inv));
  write_text_file((fs::path(out_dir) / "inventory.json").string(), inventory_json(inv));
  return inv;
}

std::string format_labels(const AugmentInventory& inv) {
  std::string text;
  for (const auto& e : inv.entries) text += format_pose_line(e.name + " " + e.camera, e.pose) + "\n";
  return text;
}

std::string inventory_json(const AugmentInventory& inv) {
  std::map<std::string, int> per_camera;
  for (const auto& e : inv.entries) {
    const std::string key = e.camera.rfind("cube_", 0) == 0 ? "cube" : e.camera;
    ++per_camera[key];
  }
  nlohmann::ordered_json doc;
  doc["originals"] = inv.originals;
  doc["crops"] = inv.crops;
  doc["total"] = inv.originals + inv.crops;
  doc["per_camera"] = per_camera;
  return doc.dump(2) + "\n";
}

}  // namespace omniloc
