// Copyright 2026 The MTDA Authors.
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

#include <png.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>

#include "mtda/data.hpp"
#include "mtda/error.hpp"

namespace fs = std::filesystem;

namespace mtda {

const Dataset& DatasetRegistry::domain(int domain_id) const {
  if (domain_id == 0) return source;
  MTDA_REQUIRE(domain_id >= 1 && domain_id <= num_targets(), "unknown domain id " + std::to_string(domain_id));
  return targets[static_cast<std::size_t>(domain_id - 1)];
}

bool DatasetRegistry::has_truth(int domain_id) const {
  if (domain_id == 0) return true;
  if (domain_id < 1 || domain_id > static_cast<int>(hidden_truth.size())) return false;
  const auto& t = hidden_truth[static_cast<std::size_t>(domain_id - 1)];
  return !t.empty() && std::all_of(t.begin(), t.end(), [](const auto& v) { return v.has_value(); });
}

std::optional<int> DatasetRegistry::truth(SampleId id) const {
  if (id.domain == 0) return domain(0).samples.at(static_cast<std::size_t>(id.index)).label;
  if (id.domain < 1 || id.domain > static_cast<int>(hidden_truth.size())) return std::nullopt;
  const auto& t = hidden_truth[static_cast<std::size_t>(id.domain - 1)];
  if (id.index < 0 || id.index >= static_cast<int>(t.size())) return std::nullopt;
  return t[static_cast<std::size_t>(id.index)];
}

void DatasetRegistry::validate() const {
  MTDA_REQUIRE(num_classes >= 1, "registry has no classes");
  MTDA_REQUIRE(num_targets() >= 1, "registry needs at least one target domain");
  MTDA_REQUIRE(!source.empty(), "source domain is empty");
  MTDA_REQUIRE(source.domain_id == 0, "source must be domain 0");
  for (std::size_t i = 0; i < source.samples.size(); ++i) {
    const auto& s = source.samples[i];
    MTDA_REQUIRE(s.label && *s.label >= 0 && *s.label < num_classes, "source sample without a valid label");
    MTDA_REQUIRE(s.domain_id == 0 && s.index == static_cast<int>(i), "source sample identity mismatch");
    MTDA_REQUIRE(static_cast<int>(s.image.size()) == source.shape.size(), "source image size mismatch");
  }
  for (int j = 0; j < num_targets(); ++j) {
    const auto& t = targets[static_cast<std::size_t>(j)];
    MTDA_REQUIRE(t.domain_id == j + 1, "target domain ids must be 1..N in order");
    MTDA_REQUIRE(t.shape == source.shape, "all domains must share one image shape");
    for (std::size_t i = 0; i < t.samples.size(); ++i) {
      const auto& s = t.samples[i];
      MTDA_REQUIRE(!s.label.has_value(), "target sample exposes a label");
      MTDA_REQUIRE(s.domain_id == j + 1 && s.index == static_cast<int>(i), "target sample identity mismatch");
      MTDA_REQUIRE(static_cast<int>(s.image.size()) == t.shape.size(), "target image size mismatch");
    }
  }
}

namespace {

struct RawImage {
  int width = 0;
  int height = 0;
  std::vector<unsigned char> rgb;  // interleaved
};

RawImage read_png(const fs::path& path) {
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&image, path.c_str()))
    throw IoError("cannot read PNG " + path.string() + ": " + image.message);
  image.format = PNG_FORMAT_RGB;
  RawImage raw;
  raw.width = static_cast<int>(image.width);
  raw.height = static_cast<int>(image.height);
  raw.rgb.resize(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, raw.rgb.data(), 0, nullptr)) {
    png_image_free(&image);
    throw IoError("cannot decode PNG " + path.string() + ": " + image.message);
  }
  return raw;
}

// Binary PPM (P6, maxval 255) and PGM (P5).
RawImage read_pnm(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::string magic;
  in >> magic;
  auto next_int = [&] {
    in >> std::ws;
    while (in.peek() == '#') {
      std::string comment;
      std::getline(in, comment);
      in >> std::ws;
    }
    int v = 0;
    in >> v;
    return v;
  };
  if (magic != "P6" && magic != "P5") throw IoError("unsupported PNM variant in " + path.string());
  RawImage raw;
  raw.width = next_int();
  raw.height = next_int();
  const int maxval = next_int();
  in.get();
  if (raw.width <= 0 || raw.height <= 0 || maxval != 255) throw IoError("unsupported PNM header in " + path.string());
  const std::size_t n = static_cast<std::size_t>(raw.width) * raw.height;
  std::vector<unsigned char> buf(magic == "P6" ? 3 * n : n);
  in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
  if (!in) throw IoError("truncated PNM " + path.string());
  if (magic == "P6") {
    raw.rgb = std::move(buf);
  } else {
    raw.rgb.resize(3 * n);
    for (std::size_t i = 0; i < n; ++i) raw.rgb[3 * i] = raw.rgb[3 * i + 1] = raw.rgb[3 * i + 2] = buf[i];
  }
  return raw;
}

bool is_image_file(const fs::path& p) {
  auto ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  return ext == ".png" || ext == ".ppm" || ext == ".pgm";
}

// Bilinear resample to the target shape, channel-major output in [0,1].
std::vector<float> load_image(const fs::path& path, const ImageShape& shape) {
  auto ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  const RawImage raw = ext == ".png" ? read_png(path) : read_pnm(path);
  std::vector<float> out(static_cast<std::size_t>(shape.size()));
  const int plane = shape.height * shape.width;
  for (int y = 0; y < shape.height; ++y) {
    const double sy = std::clamp((y + 0.5) * raw.height / shape.height - 0.5, 0.0, raw.height - 1.0);
    const int y0 = static_cast<int>(sy);
    const int y1 = std::min(y0 + 1, raw.height - 1);
    const double fy = sy - y0;
    for (int x = 0; x < shape.width; ++x) {
      const double sx = std::clamp((x + 0.5) * raw.width / shape.width - 0.5, 0.0, raw.width - 1.0);
      const int x0 = static_cast<int>(sx);
      const int x1 = std::min(x0 + 1, raw.width - 1);
      const double fx = sx - x0;
      for (int c = 0; c < 3; ++c) {
        auto px = [&](int yy, int xx) { return raw.rgb[(static_cast<std::size_t>(yy) * raw.width + xx) * 3 + c] / 255.0; };
        const double v = (1 - fy) * ((1 - fx) * px(y0, x0) + fx * px(y0, x1)) + fy * ((1 - fx) * px(y1, x0) + fx * px(y1, x1));
        out[static_cast<std::size_t>(c * plane + y * shape.width + x)] = static_cast<float>(v);
      }
    }
  }
  return out;
}

void write_png(const fs::path& path, const std::vector<float>& image, const ImageShape& shape) {
  const int plane = shape.height * shape.width;
  std::vector<unsigned char> rgb(static_cast<std::size_t>(plane) * 3);
  for (int i = 0; i < plane; ++i)
    for (int c = 0; c < 3; ++c)
      rgb[static_cast<std::size_t>(i) * 3 + c] = static_cast<unsigned char>(
          std::lround(std::clamp(image[static_cast<std::size_t>(c * plane + i)], 0.0f, 1.0f) * 255.0f));
  png_image img{};
  img.version = PNG_IMAGE_VERSION;
  img.width = static_cast<png_uint_32>(shape.width);
  img.height = static_cast<png_uint_32>(shape.height);
  img.format = PNG_FORMAT_RGB;
  if (!png_image_write_to_file(&img, path.c_str(), 0, rgb.data(), 0, nullptr))
    throw IoError("cannot write PNG " + path.string() + ": " + img.message);
}

std::vector<fs::path> sorted_entries(const fs::path& dir, bool directories) {
  std::vector<fs::path> out;
  for (const auto& e : fs::directory_iterator(dir))
    if (directories ? e.is_directory() : (e.is_regular_file() && is_image_file(e.path()))) out.push_back(e.path());
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

DatasetRegistry ingest_directory(const fs::path& root, const ImageShape& shape) {
  if (!fs::is_directory(root)) throw IoError("dataset root " + root.string() + " is not a directory");
  const fs::path source_dir = root / "source";
  if (!fs::is_directory(source_dir)) throw ConfigError("label space undefined: missing source/ under " + root.string());

  DatasetRegistry reg;
  std::map<std::string, int> class_index;
  for (const auto& dir : sorted_entries(source_dir, true)) {
    class_index.emplace(dir.filename().string(), static_cast<int>(reg.class_names.size()));
    reg.class_names.push_back(dir.filename().string());
  }
  if (reg.class_names.empty()) throw ConfigError("label space undefined: source/ has no class folders");
  reg.num_classes = static_cast<int>(reg.class_names.size());

  reg.source.name = "source";
  reg.source.domain_id = 0;
  reg.source.shape = shape;
  for (const auto& dir : sorted_entries(source_dir, true)) {
    const int label = class_index.at(dir.filename().string());
    for (const auto& file : sorted_entries(dir, false)) {
      Sample s;
      s.image = load_image(file, shape);
      s.label = label;
      s.domain_id = 0;
      s.index = static_cast<int>(reg.source.samples.size());
      reg.source.samples.push_back(std::move(s));
    }
  }

  std::vector<fs::path> target_dirs;
  for (const auto& dir : sorted_entries(root, true))
    if (dir.filename().string().rfind("target_", 0) == 0) target_dirs.push_back(dir);
  if (target_dirs.empty()) throw ConfigError("no target_<name>/ trees under " + root.string());

  for (const auto& tdir : target_dirs) {
    Dataset ds;
    ds.name = tdir.filename().string().substr(7);
    ds.domain_id = static_cast<int>(reg.targets.size()) + 1;
    ds.shape = shape;
    std::vector<std::optional<int>> truth;
    for (const auto& cdir : sorted_entries(tdir, true)) {
      const std::string cname = cdir.filename().string();
      std::optional<int> label;
      if (cname != "unlabeled") {
        auto it = class_index.find(cname);
        if (it == class_index.end())
          throw LabelSpaceError("label-space mismatch: class '" + cname + "' in " + tdir.filename().string() +
                                " is not a source class");
        label = it->second;
      }
      for (const auto& file : sorted_entries(cdir, false)) {
        Sample s;
        s.image = load_image(file, shape);
        s.domain_id = ds.domain_id;
        s.index = static_cast<int>(ds.samples.size());
        ds.samples.push_back(std::move(s));
        truth.push_back(label);
      }
    }
    reg.targets.push_back(std::move(ds));
    reg.hidden_truth.push_back(std::move(truth));
  }
  reg.validate();
  return reg;
}

void export_directory(const DatasetRegistry& registry, const fs::path& root) {
  std::error_code ec;
  fs::create_directories(root, ec);
  if (ec) throw IoError("cannot create " + root.string() + ": " + ec.message());
  auto emit = [&](const fs::path& dir, const Sample& s, const ImageShape& shape) {
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
    char name[32];
    std::snprintf(name, sizeof(name), "%06d.png", s.index);
    write_png(dir / name, s.image, shape);
  };
  for (const auto& s : registry.source.samples)
    emit(root / "source" / registry.class_names.at(static_cast<std::size_t>(*s.label)), s, registry.source.shape);
  for (const auto& t : registry.targets) {
    const fs::path tdir = root / ("target_" + t.name);
    for (const auto& s : t.samples) {
      const auto truth = registry.truth(s.id());
      emit(tdir / (truth ? registry.class_names.at(static_cast<std::size_t>(*truth)) : std::string("unlabeled")), s,
           t.shape);
    }
  }
}

}  // namespace mtda
