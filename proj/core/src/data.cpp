#include "advregions/data.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>

#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include "advregions/error.hpp"

namespace advregions {

namespace fs = std::filesystem;

const char* to_string(Split s) noexcept { return s == Split::train ? "train" : "test"; }

Split split_from_string(const std::string& s) {
  if (s == "train") return Split::train;
  if (s == "test") return Split::test;
  throw ValidationError("unknown split tag '" + s + "'");
}

void PairSpec::validate() const {
  if (dataset_id.empty()) throw ConfigError("pair: dataset id is empty");
  if (source_class.empty() || target_class.empty()) throw ConfigError("pair: class name is empty");
  if (source_class == target_class) {
    throw ConfigError("pair: source and target class are both '" + source_class + "'");
  }
}

std::size_t LabeledImageSet::count(Label l) const {
  return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), l));
}

void LabeledImageSet::validate() const {
  if (images.size() != labels.size()) {
    throw ValidationError("set has " + std::to_string(images.size()) + " images but " +
                          std::to_string(labels.size()) + " labels");
  }
  for (std::size_t i = 1; i < images.size(); ++i) {
    if (!images[i].same_shape(images[0])) {
      throw ValidationError("image " + std::to_string(i) + " differs in shape from image 0");
    }
  }
  if (split == Split::train && (count(Label::source) == 0 || count(Label::target) == 0)) {
    throw ConfigError("train split must contain both classes");
  }
}

LabeledImageSet LabeledImageSet::only(Label l) const {
  LabeledImageSet out{{}, {}, class_names, split};
  for (std::size_t i = 0; i < images.size(); ++i) {
    if (labels[i] == l) {
      out.images.push_back(images[i]);
      out.labels.push_back(l);
    }
  }
  return out;
}

LabeledImageSet LabeledImageSet::select(const std::vector<std::size_t>& indices) const {
  LabeledImageSet out{{}, {}, class_names, split};
  out.images.reserve(indices.size());
  out.labels.reserve(indices.size());
  for (std::size_t i : indices) {
    out.images.push_back(images.at(i));
    out.labels.push_back(labels.at(i));
  }
  return out;
}

Image normalize(const RawImage& raw) {
  if (raw.height <= 0 || raw.width <= 0 || raw.channels <= 0) {
    throw ValidationError("raw image has non-positive dimensions");
  }
  const std::size_t plane = static_cast<std::size_t>(raw.height) * raw.width;
  if (raw.values.size() != plane * raw.channels) {
    throw ValidationError("raw image buffer size does not match dimensions");
  }
  std::vector<double> planar(raw.values.size());
  for (std::size_t p = 0; p < plane; ++p) {
    for (int c = 0; c < raw.channels; ++c) {
      const int v = raw.values[p * raw.channels + c];
      if (v < 0 || v > 255) {
        throw ValidationError("raw pixel value " + std::to_string(v) + " outside [0,255]");
      }
      planar[c * plane + p] = static_cast<double>(v) / 255.0;
    }
  }
  return Image(raw.channels, raw.height, raw.width, std::move(planar));
}

namespace {

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
  return seed ^ (0x9E3779B97F4A7C15ull * (salt + 1));
}

// Indices of each class, then a seeded sample of at most `cap` of them kept in
// original order.
std::vector<std::size_t> capped_indices(const std::vector<std::size_t>& pool, int cap,
                                        std::uint64_t seed) {
  if (cap <= 0 || static_cast<std::size_t>(cap) >= pool.size()) return pool;
  std::vector<std::size_t> shuffled = pool;
  std::mt19937_64 rng(seed);
  std::shuffle(shuffled.begin(), shuffled.end(), rng);
  shuffled.resize(static_cast<std::size_t>(cap));
  std::sort(shuffled.begin(), shuffled.end());
  return shuffled;
}

LabeledImageSet apply_caps(const LabeledImageSet& set, int cap, std::uint64_t seed) {
  if (cap <= 0) return set;
  std::vector<std::size_t> keep;
  for (Label l : {Label::source, Label::target}) {
    std::vector<std::size_t> pool;
    for (std::size_t i = 0; i < set.size(); ++i) {
      if (set.labels[i] == l) pool.push_back(i);
    }
    auto chosen = capped_indices(pool, cap, mix_seed(seed, static_cast<std::uint64_t>(l) + 17));
    keep.insert(keep.end(), chosen.begin(), chosen.end());
  }
  std::sort(keep.begin(), keep.end());
  return set.select(keep);
}

std::uint32_t read_be32(std::istream& in, const fs::path& path) {
  unsigned char b[4];
  if (!in.read(reinterpret_cast<char*>(b), 4)) throw IngestionError(path.string(), "truncated header");
  return (std::uint32_t{b[0]} << 24) | (std::uint32_t{b[1]} << 16) | (std::uint32_t{b[2]} << 8) |
         std::uint32_t{b[3]};
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

const std::vector<std::string>& fashion_names() {
  static const std::vector<std::string> names = {"T-shirt/top", "Trouser", "Pullover", "Dress",
                                                 "Coat",        "Sandal",  "Shirt",    "Sneaker",
                                                 "Bag",         "Ankle boot"};
  return names;
}

// Resolves a class name (or numeric label) against a built-in name list.
int resolve_builtin_class(const std::string& dataset, const std::string& name) {
  const auto names = builtin_class_names(dataset);
  const std::string wanted = lower(name);
  for (std::size_t i = 0; i < names.size(); ++i) {
    const std::string n = lower(names[i]);
    if (wanted == n || wanted == n + "s" || wanted == std::to_string(i)) return static_cast<int>(i);
  }
  throw ConfigError(dataset + ": unknown class '" + name + "'");
}

fs::path builtin_dir(const fs::path& root, const std::string& dataset) {
  if (fs::exists(root / dataset / "train-images-idx3-ubyte")) return root / dataset;
  if (fs::exists(root / "train-images-idx3-ubyte")) return root;
  throw ConfigError(dataset + ": IDX files not found under " + root.string() +
                    " (run tools/fetch_datasets.sh)");
}

LabeledImageSet load_idx_split(const fs::path& dir, const std::string& prefix, int source, int target,
                               const std::array<std::string, 2>& names, Split split) {
  const auto images = read_idx_images(dir / (prefix + "-images-idx3-ubyte"));
  const auto labels = read_idx_labels(dir / (prefix + "-labels-idx1-ubyte"));
  if (static_cast<std::size_t>(images.count) != labels.size()) {
    throw IngestionError((dir / prefix).string(), "image and label counts differ");
  }
  LabeledImageSet set{{}, {}, names, split};
  const std::size_t plane = static_cast<std::size_t>(images.rows) * images.cols;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] != source && labels[i] != target) continue;
    RawImage raw{images.rows, images.cols, 1, {}};
    raw.values.assign(images.bytes.begin() + static_cast<std::ptrdiff_t>(i * plane),
                      images.bytes.begin() + static_cast<std::ptrdiff_t>((i + 1) * plane));
    set.images.push_back(normalize(raw));
    set.labels.push_back(labels[i] == source ? Label::source : Label::target);
  }
  return set;
}

bool is_image_file(const fs::path& p) {
  const std::string ext = lower(p.extension().string());
  return ext == ".png" || ext == ".jpg" || ext == ".jpeg" || ext == ".bmp";
}

std::vector<fs::path> list_images(const fs::path& dir) {
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && is_image_file(entry.path())) files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  return files;
}

Image read_folder_image(const fs::path& path, int channels, int size) {
  cv::Mat mat = cv::imread(path.string(), channels == 1 ? cv::IMREAD_GRAYSCALE : cv::IMREAD_COLOR);
  if (mat.empty()) throw IngestionError(path.string(), "unreadable or corrupt image");
  if (mat.rows != size || mat.cols != size) {
    cv::Mat resized;
    cv::resize(mat, resized, cv::Size(size, size), 0, 0, cv::INTER_LINEAR);
    mat = resized;
  }
  if (channels == 3) cv::cvtColor(mat, mat, cv::COLOR_BGR2RGB);
  RawImage raw{size, size, channels, {}};
  raw.values.assign(mat.data, mat.data + static_cast<std::size_t>(size) * size * channels);
  return normalize(raw);
}

// Loads <dir>/<source>/ and <dir>/<target>/ into one set.
LabeledImageSet load_folder_split(const fs::path& dir, const PairSpec& spec, int size, Split split) {
  std::array<std::vector<fs::path>, 2> files;
  const std::array<std::string, 2> names{spec.source_class, spec.target_class};
  for (int k = 0; k < 2; ++k) {
    const fs::path class_dir = dir / names[k];
    if (!fs::is_directory(class_dir)) {
      throw ConfigError("missing class directory " + class_dir.string());
    }
    files[k] = list_images(class_dir);
    if (files[k].empty()) throw ConfigError("class directory " + class_dir.string() + " has no images");
  }
  // Grayscale datasets stay single-channel; everything else is RGB.
  const cv::Mat probe = cv::imread(files[0].front().string(), cv::IMREAD_UNCHANGED);
  if (probe.empty()) throw IngestionError(files[0].front().string(), "unreadable or corrupt image");
  const int channels = probe.channels() <= 2 ? 1 : 3;

  LabeledImageSet set{{}, {}, names, split};
  for (int k = 0; k < 2; ++k) {
    for (const auto& f : files[k]) {
      set.images.push_back(read_folder_image(f, channels, size));
      set.labels.push_back(label_from_index(k));
    }
  }
  return set;
}

}  // namespace

std::vector<std::string> builtin_class_names(const std::string& dataset_id) {
  const std::string id = lower(dataset_id);
  if (id == "mnist") return {"0", "1", "2", "3", "4", "5", "6", "7", "8", "9"};
  if (id == "fashion-mnist" || id == "fashion_mnist") return fashion_names();
  return {};
}

IdxImages read_idx_images(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IngestionError(path.string(), "cannot open file");
  const std::uint32_t magic = read_be32(in, path);
  if (magic != 0x00000803u) throw IngestionError(path.string(), "not an IDX3 ubyte image file");
  IdxImages out;
  out.count = static_cast<int>(read_be32(in, path));
  out.rows = static_cast<int>(read_be32(in, path));
  out.cols = static_cast<int>(read_be32(in, path));
  out.bytes.resize(static_cast<std::size_t>(out.count) * out.rows * out.cols);
  if (!in.read(reinterpret_cast<char*>(out.bytes.data()), static_cast<std::streamsize>(out.bytes.size()))) {
    throw IngestionError(path.string(), "truncated pixel data");
  }
  return out;
}

std::vector<std::uint8_t> read_idx_labels(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IngestionError(path.string(), "cannot open file");
  if (read_be32(in, path) != 0x00000801u) throw IngestionError(path.string(), "not an IDX1 ubyte label file");
  std::vector<std::uint8_t> labels(read_be32(in, path));
  if (!in.read(reinterpret_cast<char*>(labels.data()), static_cast<std::streamsize>(labels.size()))) {
    throw IngestionError(path.string(), "truncated label data");
  }
  return labels;
}

std::pair<LabeledImageSet, LabeledImageSet> holdout_split(const LabeledImageSet& set,
                                                          double test_fraction,
                                                          std::uint64_t seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    throw ConfigError("test fraction must lie in (0,1), got " + std::to_string(test_fraction));
  }
  std::vector<std::size_t> train_idx;
  std::vector<std::size_t> test_idx;
  for (Label l : {Label::source, Label::target}) {
    std::vector<std::size_t> pool;
    for (std::size_t i = 0; i < set.size(); ++i) {
      if (set.labels[i] == l) pool.push_back(i);
    }
    if (pool.empty()) continue;
    const auto n_test = static_cast<std::size_t>(std::llround(test_fraction * pool.size()));
    if (n_test == 0 || n_test == pool.size()) {
      throw ConfigError("test fraction " + std::to_string(test_fraction) + " leaves class '" +
                        set.class_names[index_of(l)] + "' empty on one side");
    }
    std::vector<std::size_t> shuffled = pool;
    std::mt19937_64 rng(mix_seed(seed, static_cast<std::uint64_t>(l)));
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    test_idx.insert(test_idx.end(), shuffled.begin(), shuffled.begin() + static_cast<std::ptrdiff_t>(n_test));
    train_idx.insert(train_idx.end(), shuffled.begin() + static_cast<std::ptrdiff_t>(n_test), shuffled.end());
  }
  std::sort(train_idx.begin(), train_idx.end());
  std::sort(test_idx.begin(), test_idx.end());
  auto train = set.select(train_idx);
  auto test = set.select(test_idx);
  train.split = Split::train;
  test.split = Split::test;
  return {std::move(train), std::move(test)};
}

std::pair<LabeledImageSet, LabeledImageSet> load_pair(const PairSpec& spec,
                                                      const DatasetOptions& options) {
  spec.validate();
  LabeledImageSet train;
  LabeledImageSet test;
  if (!builtin_class_names(spec.dataset_id).empty()) {
    const int source = resolve_builtin_class(spec.dataset_id, spec.source_class);
    const int target = resolve_builtin_class(spec.dataset_id, spec.target_class);
    if (source == target) throw ConfigError("pair resolves to the same class twice");
    const auto all = builtin_class_names(spec.dataset_id);
    const std::array<std::string, 2> names{all[source], all[target]};
    const fs::path dir = builtin_dir(options.root, lower(spec.dataset_id));
    train = load_idx_split(dir, "train", source, target, names, Split::train);
    test = load_idx_split(dir, "t10k", source, target, names, Split::test);
  } else {
    if (options.image_size < Image::kMinSide) {
      throw ConfigError("image_size must be >= " + std::to_string(Image::kMinSide));
    }
    fs::path dir = options.root / spec.dataset_id;
    if (!fs::is_directory(dir)) dir = options.root;
    if (fs::is_directory(dir / "train") && fs::is_directory(dir / "test")) {
      train = load_folder_split(dir / "train", spec, options.image_size, Split::train);
      test = load_folder_split(dir / "test", spec, options.image_size, Split::test);
    } else {
      auto all = load_folder_split(dir, spec, options.image_size, Split::train);
      std::tie(train, test) = holdout_split(all, options.test_fraction, options.seed);
    }
  }
  train = apply_caps(train, options.train_per_class, mix_seed(options.seed, 101));
  test = apply_caps(test, options.test_per_class, mix_seed(options.seed, 202));
  train.validate();
  test.validate();
  if (test.count(Label::source) == 0 || test.count(Label::target) == 0) {
    throw ConfigError("test split must contain both classes");
  }
  return {std::move(train), std::move(test)};
}

}  // namespace advregions
