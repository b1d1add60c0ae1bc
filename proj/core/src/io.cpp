#include "advregions/io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <openssl/evp.h>
#include <opencv2/imgcodecs.hpp>

#include "advregions/error.hpp"
#include "advregions/json.hpp"

namespace advregions::io {

namespace fs = std::filesystem;
using nlohmann::json;

static_assert(std::endian::native == std::endian::little, "container I/O assumes a little-endian host");

namespace {

constexpr char kMagic[8] = {'A', 'D', 'V', 'R', 'C', 'O', 'N', 'T'};

template <typename T>
void put(std::ostream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <typename T>
T get(std::istream& in, const fs::path& path) {
  T v{};
  if (!in.read(reinterpret_cast<char*>(&v), sizeof v)) throw IngestionError(path.string(), "truncated container");
  return v;
}

void ensure_parent(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
}

cv::Mat to_gray8(const Grid<double>& values) {
  cv::Mat mat(values.height(), values.width(), CV_8U);
  for (int y = 0; y < values.height(); ++y) {
    for (int x = 0; x < values.width(); ++x) {
      mat.at<std::uint8_t>(y, x) =
          static_cast<std::uint8_t>(std::lround(std::clamp(values(y, x), 0.0, 1.0) * 255.0));
    }
  }
  return mat;
}

void write_mat(const cv::Mat& mat, const fs::path& path) {
  ensure_parent(path);
  if (!cv::imwrite(path.string(), mat)) throw Error("cannot write image " + path.string());
}

void append_image(std::vector<double>& payload, const Image& img) {
  payload.insert(payload.end(), img.pixels().begin(), img.pixels().end());
}

Image take_image(const std::vector<double>& payload, std::size_t& offset, int c, int h, int w,
                 const fs::path& path) {
  const std::size_t n = static_cast<std::size_t>(c) * h * w;
  if (offset + n > payload.size()) throw IngestionError(path.string(), "payload shorter than header claims");
  std::vector<double> px(payload.begin() + static_cast<std::ptrdiff_t>(offset),
                         payload.begin() + static_cast<std::ptrdiff_t>(offset + n));
  offset += n;
  try {
    return Image(c, h, w, std::move(px));
  } catch (const ValidationError& e) {
    throw IngestionError(path.string(), e.what());
  }
}

json shape_of(const std::vector<Image>& images) {
  if (images.empty()) return {{"channels", 0}, {"height", 0}, {"width", 0}};
  const Image& f = images.front();
  return {{"channels", f.channels()}, {"height", f.height()}, {"width", f.width()}};
}

}  // namespace

void write_container(const fs::path& path, const json& header, std::span<const double> payload) {
  if (!header.contains("kind")) throw ValidationError("container header needs a kind");
  ensure_parent(path);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  const std::string text = header.dump();
  out.write(kMagic, sizeof kMagic);
  put<std::uint32_t>(out, kContainerVersion);
  put<std::uint64_t>(out, text.size());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  put<std::uint64_t>(out, payload.size());
  out.write(reinterpret_cast<const char*>(payload.data()),
            static_cast<std::streamsize>(payload.size() * sizeof(double)));
  if (!out) throw Error("failed writing " + path.string());
}

Container read_container(const fs::path& path, std::string_view expected_kind) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IngestionError(path.string(), "cannot open file");
  char magic[8];
  if (!in.read(magic, sizeof magic) || std::memcmp(magic, kMagic, sizeof magic) != 0) {
    throw IngestionError(path.string(), "not an advregions container");
  }
  const auto version = get<std::uint32_t>(in, path);
  if (version != kContainerVersion) {
    throw IngestionError(path.string(), "unsupported container version " + std::to_string(version));
  }
  const auto header_len = get<std::uint64_t>(in, path);
  std::string text(header_len, '\0');
  if (!in.read(text.data(), static_cast<std::streamsize>(header_len))) {
    throw IngestionError(path.string(), "truncated header");
  }
  Container c;
  try {
    c.header = json::parse(text);
  } catch (const json::exception& e) {
    throw IngestionError(path.string(), std::string("bad header: ") + e.what());
  }
  const std::string kind = c.header.value("kind", "");
  if (kind != expected_kind) {
    throw IngestionError(path.string(), "expected a '" + std::string(expected_kind) + "' container, found '" + kind + "'");
  }
  const auto count = get<std::uint64_t>(in, path);
  c.payload.resize(count);
  if (!in.read(reinterpret_cast<char*>(c.payload.data()), static_cast<std::streamsize>(count * sizeof(double)))) {
    throw IngestionError(path.string(), "truncated payload");
  }
  return c;
}

void save_set(const LabeledImageSet& set, const fs::path& path) {
  json header{{"kind", "image_set"},
              {"class_names", set.class_names},
              {"split", to_string(set.split)},
              {"count", set.size()},
              {"shape", shape_of(set.images)}};
  std::vector<int> labels;
  for (Label l : set.labels) labels.push_back(index_of(l));
  header["labels"] = labels;
  std::vector<double> payload;
  for (const auto& img : set.images) append_image(payload, img);
  write_container(path, header, payload);
}

LabeledImageSet load_set(const fs::path& path) {
  const Container c = read_container(path, "image_set");
  try {
    LabeledImageSet set;
    set.class_names = c.header.at("class_names").get<std::array<std::string, 2>>();
    set.split = split_from_string(c.header.at("split").get<std::string>());
    const auto& shape = c.header.at("shape");
    const int ch = shape.at("channels"), h = shape.at("height"), w = shape.at("width");
    const auto labels = c.header.at("labels").get<std::vector<int>>();
    std::size_t offset = 0;
    for (int l : labels) {
      set.images.push_back(take_image(c.payload, offset, ch, h, w, path));
      set.labels.push_back(label_from_index(l));
    }
    if (offset != c.payload.size()) throw IngestionError(path.string(), "payload longer than header claims");
    return set;
  } catch (const json::exception& e) {
    throw IngestionError(path.string(), std::string("bad image_set header: ") + e.what());
  }
}

void save_adversarial_set(const std::vector<AdversarialPair>& pairs,
                          const std::array<std::string, 2>& class_names, const AttackConfig& cfg,
                          const fs::path& path) {
  json header{{"kind", "adversarial_set"}, {"class_names", class_names}, {"attack", cfg}, {"count", pairs.size()}};
  std::vector<Image> cleans;
  json items = json::array();
  std::vector<double> payload;
  for (const auto& p : pairs) {
    cleans.push_back(p.clean);
    items.push_back({{"label", index_of(p.clean_label)},
                     {"adv_label", index_of(p.adv_prediction.label)},
                     {"adv_probabilities", p.adv_prediction.probabilities}});
    append_image(payload, p.clean);
    append_image(payload, p.adversarial);
  }
  header["shape"] = shape_of(cleans);
  header["items"] = items;
  write_container(path, header, payload);
}

AdversarialSet load_adversarial_set(const fs::path& path) {
  const Container c = read_container(path, "adversarial_set");
  try {
    AdversarialSet out;
    out.class_names = c.header.at("class_names").get<std::array<std::string, 2>>();
    out.attack = c.header.at("attack").get<AttackConfig>();
    const auto& shape = c.header.at("shape");
    const int ch = shape.at("channels"), h = shape.at("height"), w = shape.at("width");
    std::size_t offset = 0;
    for (const auto& item : c.header.at("items")) {
      AdversarialPair p;
      p.clean = take_image(c.payload, offset, ch, h, w, path);
      p.adversarial = take_image(c.payload, offset, ch, h, w, path);
      p.clean_label = label_from_index(item.at("label").get<int>());
      p.adv_prediction.label = label_from_index(item.at("adv_label").get<int>());
      p.adv_prediction.probabilities = item.at("adv_probabilities").get<std::array<double, 2>>();
      out.pairs.push_back(std::move(p));
    }
    return out;
  } catch (const json::exception& e) {
    throw IngestionError(path.string(), std::string("bad adversarial_set header: ") + e.what());
  }
}

void save_masks(const std::vector<BinaryMask>& masks, const fs::path& path) {
  json header{{"kind", "mask_stack"}, {"count", masks.size()}};
  header["height"] = masks.empty() ? 0 : masks[0].bits.height();
  header["width"] = masks.empty() ? 0 : masks[0].bits.width();
  json kinds = json::array();
  std::vector<double> payload;
  for (const auto& m : masks) {
    require_same_shape(m.bits, masks[0].bits, "save_masks");
    kinds.push_back(to_string(m.kind));
    for (auto b : m.bits.values()) payload.push_back(b != 0 ? 1.0 : 0.0);
  }
  header["kinds"] = kinds;
  write_container(path, header, payload);
}

std::vector<BinaryMask> load_masks(const fs::path& path) {
  const Container c = read_container(path, "mask_stack");
  try {
    const int h = c.header.at("height"), w = c.header.at("width");
    const auto kinds = c.header.at("kinds").get<std::vector<std::string>>();
    const std::size_t plane = static_cast<std::size_t>(h) * w;
    if (plane * kinds.size() != c.payload.size()) throw IngestionError(path.string(), "payload size mismatch");
    std::vector<BinaryMask> masks;
    for (std::size_t k = 0; k < kinds.size(); ++k) {
      BinaryMask m{Grid<std::uint8_t>(h, w), mask_kind_from_string(kinds[k])};
      for (std::size_t i = 0; i < plane; ++i) m.bits[i] = c.payload[k * plane + i] != 0.0 ? 1 : 0;
      masks.push_back(std::move(m));
    }
    return masks;
  } catch (const json::exception& e) {
    throw IngestionError(path.string(), std::string("bad mask_stack header: ") + e.what());
  }
}

void write_png(const Grid<double>& values, const fs::path& path) { write_mat(to_gray8(values), path); }

void write_png(const BinaryMask& mask, const fs::path& path) {
  cv::Mat mat(mask.bits.height(), mask.bits.width(), CV_8U);
  for (int y = 0; y < mask.bits.height(); ++y) {
    for (int x = 0; x < mask.bits.width(); ++x) mat.at<std::uint8_t>(y, x) = mask.bits(y, x) ? 255 : 0;
  }
  write_mat(mat, path);
}

void write_png(const Image& image, const fs::path& path) {
  cv::Mat mat(image.height(), image.width(), image.channels() == 1 ? CV_8U : CV_8UC3);
  for (int y = 0; y < image.height(); ++y) {
    for (int x = 0; x < image.width(); ++x) {
      for (int c = 0; c < image.channels(); ++c) {
        // OpenCV stores BGR.
        const int dst = image.channels() == 3 ? 2 - c : 0;
        mat.ptr<std::uint8_t>(y)[x * image.channels() + dst] =
            static_cast<std::uint8_t>(std::lround(image.at(c, y, x) * 255.0));
      }
    }
  }
  write_mat(mat, path);
}

BinaryMask read_mask_png(const fs::path& path, MaskKind kind) {
  const cv::Mat mat = cv::imread(path.string(), cv::IMREAD_GRAYSCALE);
  if (mat.empty()) throw IngestionError(path.string(), "unreadable or corrupt mask image");
  BinaryMask m{Grid<std::uint8_t>(mat.rows, mat.cols), kind};
  for (int y = 0; y < mat.rows; ++y) {
    for (int x = 0; x < mat.cols; ++x) m.bits(y, x) = mat.at<std::uint8_t>(y, x) >= 128 ? 1 : 0;
  }
  return m;
}

void write_partition_png(const RegionPartition& p, const fs::path& path) {
  const int h = p.uv.bits.height();
  const int w = p.uv.bits.width();
  cv::Mat mat(h, w, CV_8UC3, cv::Scalar(0, 0, 0));
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      cv::Vec3b& px = mat.at<cv::Vec3b>(y, x);
      if (p.uv.bits(y, x)) px = {0, 0, 255};
      else if (p.u_vbar.bits(y, x)) px = {0, 255, 0};
      else if (p.ubar_v.bits(y, x)) px = {255, 0, 0};
    }
  }
  write_mat(mat, path);
}

void write_json(const json& doc, const fs::path& path) {
  ensure_parent(path);
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  out << doc.dump(2) << '\n';
}

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IngestionError(path.string(), "cannot open file");
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw IngestionError(path.string(), e.what());
  }
}

void save_representative(const RepresentativeMap& map, const json& meta, const fs::path& json_path) {
  json doc = meta;
  doc["contributors"] = map.contributors;
  doc["height"] = map.values.height();
  doc["width"] = map.values.width();
  doc["values"] = std::vector<double>(map.values.values().begin(), map.values.values().end());
  write_json(doc, json_path);
}

RepresentativeMap load_representative(const fs::path& json_path) {
  const json doc = read_json(json_path);
  try {
    RepresentativeMap map{Grid<double>(doc.at("height").get<int>(), doc.at("width").get<int>()),
                          doc.at("contributors").get<int>()};
    const auto values = doc.at("values").get<std::vector<double>>();
    if (values.size() != map.values.size()) throw IngestionError(json_path.string(), "value count mismatch");
    std::copy(values.begin(), values.end(), map.values.values().begin());
    return map;
  } catch (const json::exception& e) {
    throw IngestionError(json_path.string(), std::string("bad representative map: ") + e.what());
  }
}

void save_blob(const Blob& blob, const fs::path& json_path) {
  json doc{{"kind", "blob"},
           {"theta", blob.theta},
           {"theta_roi", blob.theta_roi},
           {"fill_value", blob.fill_value},
           {"keep_largest_component", blob.keep_largest_component},
           {"pair", blob.provenance.pair},
           {"delta_roi", blob.provenance.delta_roi},
           {"delta_roa", blob.provenance.delta_roa},
           {"contributors", blob.provenance.contributors},
           {"empty", blob.empty_warning},
           {"pixels", blob.mask.count()},
           {"height", blob.mask.bits.height()},
           {"width", blob.mask.bits.width()}};
  doc["bits"] = std::vector<int>(blob.mask.bits.values().begin(), blob.mask.bits.values().end());
  write_json(doc, json_path);
}

Blob load_blob(const fs::path& json_path) {
  const json doc = read_json(json_path);
  try {
    if (doc.at("kind") != "blob") throw IngestionError(json_path.string(), "not a blob document");
    Blob blob;
    blob.mask = BinaryMask{Grid<std::uint8_t>(doc.at("height").get<int>(), doc.at("width").get<int>()), MaskKind::blob};
    const auto bits = doc.at("bits").get<std::vector<int>>();
    if (bits.size() != blob.mask.bits.size()) throw IngestionError(json_path.string(), "bit count mismatch");
    for (std::size_t i = 0; i < bits.size(); ++i) blob.mask.bits[i] = bits[i] != 0 ? 1 : 0;
    blob.theta = doc.at("theta").get<double>();
    blob.theta_roi = doc.at("theta_roi").get<double>();
    blob.fill_value = doc.at("fill_value").get<double>();
    blob.keep_largest_component = doc.at("keep_largest_component").get<bool>();
    blob.provenance.pair = doc.at("pair").get<PairSpec>();
    blob.provenance.delta_roi = doc.at("delta_roi").get<Threshold>();
    blob.provenance.delta_roa = doc.at("delta_roa").get<Threshold>();
    blob.provenance.contributors = doc.at("contributors").get<int>();
    blob.empty_warning = doc.at("empty").get<bool>();
    return blob;
  } catch (const json::exception& e) {
    throw IngestionError(json_path.string(), std::string("bad blob document: ") + e.what());
  }
}

std::string sha256_hex(std::string_view bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw Error("sha256 failed");
  }
  std::ostringstream hex;
  for (unsigned int i = 0; i < len; ++i) hex << std::hex << std::setw(2) << std::setfill('0') << int{digest[i]};
  return hex.str();
}

std::string sha256_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IngestionError(path.string(), "cannot open file");
  std::ostringstream buf;
  buf << in.rdbuf();
  return sha256_hex(buf.str());
}

}  // namespace advregions::io
