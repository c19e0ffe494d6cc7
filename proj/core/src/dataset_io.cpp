#include "shadowcomp/dataset_io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>

#include "shadowcomp/errors.hpp"

namespace shadowcomp::io {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::uint8_t to_byte(float v) {
  return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0f, 1.0f) * 255.0f));
}

void write_json(const json& j, const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::kCorruptDataset, "cannot write " + path.string());
  out << j.dump(2) << '\n';
}

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kCorruptDataset, "missing " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::kCorruptDataset, path.string() + ": " + e.what());
  }
}

}  // namespace

float quantize(float v) noexcept { return static_cast<float>(to_byte(v)) / 255.0f; }

Image quantize(const Image& img) {
  Image out = img;
  for (auto& v : out.data) v = quantize(v);
  return out;
}

Mask quantize(const Mask& m) {
  Mask out = m;
  for (auto& v : out.data) v = quantize(v);
  return out;
}

synth::ShadowTuple quantize(const synth::ShadowTuple& t) {
  synth::ShadowTuple q = t;
  q.composite = quantize(t.composite);
  q.target = quantize(t.target);
  q.fg_object = quantize(t.fg_object);
  q.fg_shadow = quantize(t.fg_shadow);
  q.bg_object = quantize(t.bg_object);
  q.bg_shadow = quantize(t.bg_shadow);
  return q;
}

void save_png(const Image& img, const fs::path& path) {
  cv::Mat mat(img.height, img.width, CV_8UC3);
  for (int r = 0; r < img.height; ++r)
    for (int c = 0; c < img.width; ++c) {
      auto& px = mat.at<cv::Vec3b>(r, c);
      // OpenCV stores BGR.
      px[0] = to_byte(img.at(2, r, c));
      px[1] = to_byte(img.at(1, r, c));
      px[2] = to_byte(img.at(0, r, c));
    }
  if (!cv::imwrite(path.string(), mat))
    throw Error(ErrorKind::kCorruptDataset, "cannot write " + path.string());
}

void save_png(const Mask& m, const fs::path& path) {
  cv::Mat mat(m.height, m.width, CV_8UC1);
  for (int r = 0; r < m.height; ++r)
    for (int c = 0; c < m.width; ++c) mat.at<std::uint8_t>(r, c) = to_byte(m.at(r, c));
  if (!cv::imwrite(path.string(), mat))
    throw Error(ErrorKind::kCorruptDataset, "cannot write " + path.string());
}

Image load_image_png(const fs::path& path) {
  cv::Mat mat = cv::imread(path.string(), cv::IMREAD_COLOR);
  if (mat.empty()) throw Error(ErrorKind::kCorruptDataset, "cannot read " + path.string());
  Image img(mat.rows, mat.cols);
  for (int r = 0; r < mat.rows; ++r)
    for (int c = 0; c < mat.cols; ++c) {
      const auto& px = mat.at<cv::Vec3b>(r, c);
      img.at(0, r, c) = px[2] / 255.0f;
      img.at(1, r, c) = px[1] / 255.0f;
      img.at(2, r, c) = px[0] / 255.0f;
    }
  return img;
}

Mask load_mask_png(const fs::path& path) {
  cv::Mat mat = cv::imread(path.string(), cv::IMREAD_GRAYSCALE);
  if (mat.empty()) throw Error(ErrorKind::kCorruptDataset, "cannot read " + path.string());
  Mask m(mat.rows, mat.cols);
  for (int r = 0; r < mat.rows; ++r)
    for (int c = 0; c < mat.cols; ++c) m.at(r, c) = mat.at<std::uint8_t>(r, c) / 255.0f;
  return m;
}

json to_json(const geometry::BBox& b) { return json{{"x", b.x}, {"y", b.y}, {"w", b.w}, {"h", b.h}}; }

geometry::BBox bbox_from_json(const json& j) {
  return geometry::BBox{j.at("x").get<double>(), j.at("y").get<double>(), j.at("w").get<double>(),
                        j.at("h").get<double>()};
}

json to_json(const synth::TupleMeta& m) {
  return json{{"id", m.id},
              {"seed", m.seed},
              {"k", m.k},
              {"domain", synth::to_string(m.domain)},
              {"object_box", to_json(m.object_box)},
              {"shadow_box", to_json(m.shadow_box)},
              {"light",
               {{"angle", m.light.angle},
                {"elongation", m.light.elongation},
                {"attenuation", m.light.attenuation},
                {"blur", m.light.blur}}},
              {"generator_version", m.generator_version}};
}

synth::TupleMeta meta_from_json(const json& j) {
  synth::TupleMeta m;
  try {
    m.id = j.at("id").get<std::string>();
    m.seed = j.at("seed").get<std::uint64_t>();
    m.k = j.at("k").get<int>();
    m.domain = synth::domain_from_string(j.at("domain").get<std::string>());
    m.object_box = bbox_from_json(j.at("object_box"));
    m.shadow_box = bbox_from_json(j.at("shadow_box"));
    const auto& l = j.at("light");
    m.light = synth::LightSpec{l.at("angle").get<double>(), l.at("elongation").get<double>(),
                               l.at("attenuation").get<double>(), l.at("blur").get<double>()};
    m.generator_version = j.at("generator_version").get<std::string>();
  } catch (const json::exception& e) {
    throw Error(ErrorKind::kCorruptDataset, std::string("meta.json: ") + e.what());
  }
  return m;
}

void write_dataset(const std::vector<synth::ShadowTuple>& tuples, const fs::path& dir,
                   synth::Domain domain) {
  fs::create_directories(dir);
  std::vector<std::string> ids;
  int resolution = 0;
  for (const auto& t : tuples) {
    const fs::path td = dir / t.meta.id;
    fs::create_directories(td);
    save_png(t.composite, td / "comp.png");
    save_png(t.target, td / "gt.png");
    save_png(binarize(t.fg_object), td / "m_fo.png");
    save_png(binarize(t.fg_shadow), td / "m_fs.png");
    save_png(binarize(t.bg_object), td / "m_bo.png");
    save_png(binarize(t.bg_shadow), td / "m_bs.png");
    write_json(to_json(t.meta), td / "meta.json");
    ids.push_back(t.meta.id);
    resolution = t.composite.height;
  }
  std::sort(ids.begin(), ids.end());
  write_json(json{{"schema_version", kDatasetSchemaVersion},
                  {"generator_version", synth::kGeneratorVersion},
                  {"domain", synth::to_string(domain)},
                  {"resolution", resolution},
                  {"tuples", ids}},
             dir / "manifest.json");
}

Manifest read_manifest(const fs::path& dir) {
  const json j = read_json(dir / "manifest.json");
  Manifest m;
  try {
    m.schema_version = j.at("schema_version").get<int>();
    if (m.schema_version != kDatasetSchemaVersion)
      throw Error(ErrorKind::kSchemaMismatch,
                  "dataset schema " + std::to_string(m.schema_version) + ", expected " +
                      std::to_string(kDatasetSchemaVersion));
    m.generator_version = j.at("generator_version").get<std::string>();
    m.domain = synth::domain_from_string(j.at("domain").get<std::string>());
    m.resolution = j.at("resolution").get<int>();
    m.ids = j.at("tuples").get<std::vector<std::string>>();
  } catch (const json::exception& e) {
    throw Error(ErrorKind::kCorruptDataset, std::string("manifest.json: ") + e.what());
  }
  std::sort(m.ids.begin(), m.ids.end());
  return m;
}

synth::ShadowTuple read_tuple(const fs::path& dir, const std::string& id) {
  const fs::path td = dir / id;
  if (!fs::is_directory(td)) throw Error(ErrorKind::kCorruptDataset, "missing tuple " + id);
  synth::ShadowTuple t;
  t.composite = load_image_png(td / "comp.png");
  t.target = load_image_png(td / "gt.png");
  t.fg_object = load_mask_png(td / "m_fo.png");
  t.fg_shadow = load_mask_png(td / "m_fs.png");
  t.bg_object = load_mask_png(td / "m_bo.png");
  t.bg_shadow = load_mask_png(td / "m_bs.png");
  t.meta = meta_from_json(read_json(td / "meta.json"));
  if (t.meta.id != id) throw Error(ErrorKind::kCorruptDataset, "meta id mismatch for " + id);
  const bool ok = t.composite.same_shape(t.target) && t.composite.same_shape(t.fg_object) &&
                  t.composite.same_shape(t.fg_shadow) && t.composite.same_shape(t.bg_object) &&
                  t.composite.same_shape(t.bg_shadow);
  if (!ok) throw Error(ErrorKind::kCorruptDataset, "raster size mismatch in " + id);
  return t;
}

std::vector<synth::ShadowTuple> read_dataset(const fs::path& dir) {
  const Manifest m = read_manifest(dir);
  if (m.ids.empty()) throw Error(ErrorKind::kCorruptDataset, "manifest lists no tuples");
  std::vector<synth::ShadowTuple> out;
  out.reserve(m.ids.size());
  for (const auto& id : m.ids) out.push_back(read_tuple(dir, id));
  return out;
}

}  // namespace shadowcomp::io
