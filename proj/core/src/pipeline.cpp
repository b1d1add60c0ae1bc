#include "advregions/pipeline.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <random>

#include <spdlog/spdlog.h>

#include "advregions/error.hpp"
#include "advregions/io.hpp"
#include "advregions/json.hpp"

namespace advregions {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kManifestVersion = 1;

bool dark_background(const std::string& dataset_id) { return !builtin_class_names(dataset_id).empty(); }

std::string fmt_score(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

json model_cache_key(const ExperimentConfig& cfg) {
  return {{"format", "advregions-model-key"},
          {"version", kManifestVersion},
          {"pair", cfg.pair},
          {"data",
           {{"root", cfg.data.root.string()},
            {"image_size", cfg.data.image_size},
            {"train_per_class", cfg.data.train_per_class},
            {"test_per_class", cfg.data.test_per_class},
            {"test_fraction", cfg.data.test_fraction},
            {"seed", cfg.data.seed}}},
          {"model", cfg.model}};
}

std::string sample_name(const char* prefix, std::size_t i) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%s_%04zu.png", prefix, i);
  return buf;
}

json stats_json(const RegionStats& s) {
  json out = json::object();
  for (std::size_t k = 0; k < 4; ++k) {
    out[kRegionNames[k]] = {{"count", s.counts[k]}, {"fraction", s.fractions[k]}};
  }
  out["total"] = s.total;
  return out;
}

json ssim_json(const SsimReport& r) {
  return {{"pair", r.pair},
          {"mean_individual_ssim", r.mean_individual_ssim},
          {"representative_ssim", r.representative_ssim},
          {"n", r.n},
          {"window", r.window},
          {"weighting", "uniform"}};
}

}  // namespace

ExperimentConfig ExperimentConfig::from_json(const json& doc) {
  try {
    ExperimentConfig cfg;
    cfg.pair = doc.at("pair").get<PairSpec>();
    cfg.seed = doc.value("seed", std::uint64_t{0});
    if (doc.contains("data")) {
      const auto& d = doc.at("data");
      cfg.data.root = d.value("root", cfg.data.root.string());
      cfg.data.image_size = d.value("image_size", cfg.data.image_size);
      cfg.data.train_per_class = d.value("train_per_class", cfg.data.train_per_class);
      cfg.data.test_per_class = d.value("test_per_class", cfg.data.test_per_class);
      cfg.data.test_fraction = d.value("test_fraction", cfg.data.test_fraction);
    }
    if (doc.contains("model")) cfg.model = doc.at("model").get<ModelConfig>();
    if (doc.contains("attack")) cfg.attack = doc.at("attack").get<AttackConfig>();
    if (doc.contains("segregation")) {
      const auto& s = doc.at("segregation");
      if (s.contains("delta_roi")) cfg.segregation.delta_roi = s.at("delta_roi").get<Threshold>();
      if (s.contains("delta_roa")) cfg.segregation.delta_roa = s.at("delta_roa").get<Threshold>();
      cfg.segregation.samples = s.value("samples", cfg.segregation.samples);
      const std::string rep = s.value("representative", std::string("masks"));
      if (rep == "masks") {
        cfg.segregation.representative = RepresentativeSource::masks;
      } else if (rep == "maps") {
        cfg.segregation.representative = RepresentativeSource::maps;
      } else {
        throw ConfigError("segregation.representative must be 'masks' or 'maps'");
      }
    }
    cfg.blob.fill_value = dark_background(cfg.pair.dataset_id) ? 0.0 : 1.0;
    if (doc.contains("blob")) {
      const auto& b = doc.at("blob");
      cfg.blob.theta = b.value("theta", cfg.blob.theta);
      if (b.contains("theta_roi") && !b.at("theta_roi").is_null()) cfg.blob.theta_roi = b.at("theta_roi").get<double>();
      cfg.blob.fill_value = b.value("fill_value", cfg.blob.fill_value);
      cfg.blob.keep_largest_component = b.value("keep_largest_component", cfg.blob.keep_largest_component);
    }
    cfg.output_dir = doc.value("output_dir", cfg.output_dir.string());
    cfg.cache = doc.value("cache", cfg.cache);
    cfg.cache_dir = doc.value("cache_dir", std::string());
    cfg.export_samples = doc.value("export_samples", cfg.export_samples);
    cfg.data.seed = cfg.seed;
    cfg.model.seed = cfg.seed;
    cfg.validate();
    return cfg;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed experiment config: ") + e.what());
  }
}

json ExperimentConfig::to_json() const {
  json seg{{"delta_roi", segregation.delta_roi},
           {"delta_roa", segregation.delta_roa},
           {"samples", segregation.samples},
           {"representative", segregation.representative == RepresentativeSource::masks ? "masks" : "maps"}};
  json blob_doc{{"theta", blob.theta},
                {"theta_roi", blob.theta_roi ? json(*blob.theta_roi) : json(nullptr)},
                {"fill_value", blob.fill_value},
                {"keep_largest_component", blob.keep_largest_component}};
  return {{"pair", pair},
          {"seed", seed},
          {"data",
           {{"root", data.root.string()},
            {"image_size", data.image_size},
            {"train_per_class", data.train_per_class},
            {"test_per_class", data.test_per_class},
            {"test_fraction", data.test_fraction}}},
          {"model", model},
          {"attack", attack},
          {"segregation", seg},
          {"blob", blob_doc},
          {"output_dir", output_dir.string()},
          {"cache", cache},
          {"cache_dir", cache_dir.string()},
          {"export_samples", export_samples}};
}

void ExperimentConfig::validate() const {
  pair.validate();
  model.validate();
  attack.validate();
  blob.validate();
  if (segregation.samples < 0) throw ConfigError("segregation.samples must be >= 0");
  if (data.train_per_class < 0 || data.test_per_class < 0) throw ConfigError("per-class caps must be >= 0");
  if (export_samples < 0) throw ConfigError("export_samples must be >= 0");
  if (output_dir.empty()) throw ConfigError("output_dir is empty");
}

std::map<std::string, std::string> save_segregation(const Segregation& seg, const SegregationOptions& options,
                                                    const PairSpec& pair, const fs::path& dir, int export_samples) {
  std::map<std::string, std::string> written;
  io::save_masks(seg.roi_masks, dir / "roi_masks.bin");
  io::save_masks(seg.roa_masks, dir / "roa_masks.bin");
  written["roi_masks"] = "roi_masks.bin";
  written["roa_masks"] = "roa_masks.bin";
  const json meta{{"kind", "segregation"},
                  {"pair", pair},
                  {"delta_roi", options.delta_roi},
                  {"delta_roa", options.delta_roa},
                  {"samples", seg.roi_masks.size()},
                  {"representative_source", options.representative == RepresentativeSource::masks ? "masks" : "maps"},
                  {"degenerate_roi", seg.degenerate_roi},
                  {"degenerate_roa", seg.degenerate_roa}};
  io::write_json(meta, dir / "segregation.json");
  written["segregation"] = "segregation.json";
  json roi_meta = meta;
  roi_meta["kind"] = "roi";
  json roa_meta = meta;
  roa_meta["kind"] = "roa";
  io::save_representative(seg.rep_roi, roi_meta, dir / "representative_roi.json");
  io::save_representative(seg.rep_roa, roa_meta, dir / "representative_roa.json");
  io::write_png(seg.rep_roi.values, dir / "representative_roi.png");
  io::write_png(seg.rep_roa.values, dir / "representative_roa.png");
  written["representative_roi"] = "representative_roi.json";
  written["representative_roa"] = "representative_roa.json";
  written["representative_roi_png"] = "representative_roi.png";
  written["representative_roa_png"] = "representative_roa.png";
  const std::size_t n_export = std::min(static_cast<std::size_t>(std::max(export_samples, 0)), seg.pairs.size());
  for (std::size_t i = 0; i < n_export; ++i) {
    io::write_png(seg.pairs[i].clean, dir / "samples" / sample_name("clean", i));
    io::write_png(seg.pairs[i].adversarial, dir / "samples" / sample_name("adv", i));
    io::write_png(seg.roi_maps[i].values, dir / "samples" / sample_name("roi_map", i));
    io::write_png(seg.roa_maps[i].values, dir / "samples" / sample_name("roa_map", i));
    io::write_png(seg.roi_masks[i], dir / "samples" / sample_name("roi_mask", i));
    io::write_png(seg.roa_masks[i], dir / "samples" / sample_name("roa_mask", i));
  }
  return written;
}

Segregation load_segregation(const fs::path& dir) {
  Segregation seg;
  seg.roi_masks = io::load_masks(dir / "roi_masks.bin");
  seg.roa_masks = io::load_masks(dir / "roa_masks.bin");
  seg.rep_roi = io::load_representative(dir / "representative_roi.json");
  seg.rep_roa = io::load_representative(dir / "representative_roa.json");
  if (seg.roi_masks.size() != seg.roa_masks.size()) {
    throw IngestionError(dir.string(), "RoI and RoA mask stacks differ in length");
  }
  return seg;
}

std::map<std::string, std::string> save_isolation(const IsolationSummary& summary, const Segregation& seg,
                                                  const fs::path& dir, int export_samples) {
  std::map<std::string, std::string> written;
  io::write_partition_png(summary.representative, dir / "partition_representative.png");
  written["partition_representative"] = "partition_representative.png";
  const std::size_t n_export =
      std::min(static_cast<std::size_t>(std::max(export_samples, 0)), seg.roi_masks.size());
  for (std::size_t i = 0; i < n_export; ++i) {
    io::write_partition_png(partition(seg.roi_masks[i], seg.roa_masks[i]),
                            dir / "samples" / sample_name("partition", i));
  }
  json regions{{"representative", stats_json(summary.representative_stats)}};
  for (std::size_t k = 0; k < 4; ++k) {
    regions["mean_individual_fraction"][kRegionNames[k]] = summary.mean_individual_fractions[k];
  }
  io::write_json(regions, dir / "regions.json");
  written["regions"] = "regions.json";
  return written;
}

LabeledImageSet source_subset(const LabeledImageSet& set, int cap, std::uint64_t seed) {
  LabeledImageSet src = set.only(Label::source);
  if (cap <= 0 || static_cast<std::size_t>(cap) >= src.size()) return src;
  std::vector<std::size_t> idx(src.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::mt19937_64 rng(seed ^ 0x5E6E6A7E5ull);
  std::shuffle(idx.begin(), idx.end(), rng);
  idx.resize(static_cast<std::size_t>(cap));
  std::sort(idx.begin(), idx.end());
  return src.select(idx);
}

Segregation segregate(const Model& model, const LabeledImageSet& images, const AttackConfig& attack,
                      const SegregationOptions& options) {
  if (images.empty()) throw ValidationError("segregate: no images");
  Segregation seg;
  for (std::size_t i = 0; i < images.size(); ++i) {
    seg.pairs.push_back(fgsm(model, images.images[i], images.labels[i], attack));
    seg.roi_maps.push_back(roi_map(model, images.images[i]));
    seg.roa_maps.push_back(roa_map(seg.pairs.back()));
    seg.degenerate_roi += seg.roi_maps.back().degenerate ? 1 : 0;
    seg.degenerate_roa += seg.roa_maps.back().degenerate ? 1 : 0;
    seg.roi_masks.push_back(threshold_mask(seg.roi_maps.back(), options.delta_roi));
    seg.roa_masks.push_back(threshold_mask(seg.roa_maps.back(), options.delta_roa));
  }
  if (options.representative == RepresentativeSource::masks) {
    seg.rep_roi = representative_map(seg.roi_masks);
    seg.rep_roa = representative_map(seg.roa_masks);
  } else {
    seg.rep_roi = representative_from_maps(seg.roi_maps);
    seg.rep_roa = representative_from_maps(seg.roa_maps);
  }
  if (seg.degenerate_roi > 0 || seg.degenerate_roa > 0) {
    spdlog::warn("segregate: {} all-zero RoI maps and {} all-zero RoA maps out of {}", seg.degenerate_roi,
                 seg.degenerate_roa, images.size());
  }
  return seg;
}

IsolationSummary isolate(const Segregation& seg, const BlobOptions& blob) {
  IsolationSummary out;
  BinaryMask roi{Grid<std::uint8_t>(seg.rep_roi.values.height(), seg.rep_roi.values.width()), MaskKind::roi};
  BinaryMask roa{Grid<std::uint8_t>(seg.rep_roa.values.height(), seg.rep_roa.values.width()), MaskKind::roa};
  for (std::size_t i = 0; i < roi.bits.size(); ++i) {
    roi.bits[i] = seg.rep_roi.values[i] >= blob.roi_cut() ? 1 : 0;
    roa.bits[i] = seg.rep_roa.values[i] >= blob.theta ? 1 : 0;
  }
  out.representative = partition(roi, roa);
  out.representative_stats = region_stats(out.representative);
  for (std::size_t i = 0; i < seg.roi_masks.size(); ++i) {
    const RegionStats s = region_stats(partition(seg.roi_masks[i], seg.roa_masks[i]));
    for (std::size_t k = 0; k < 4; ++k) out.mean_individual_fractions[k] += s.fractions[k];
  }
  if (!seg.roi_masks.empty()) {
    for (double& f : out.mean_individual_fractions) f /= static_cast<double>(seg.roi_masks.size());
  }
  return out;
}

std::string scores_csv_row(const PairSpec& pair, const ScoreQuad& s, std::size_t n_test) {
  return csv_field(pair.dataset_id) + "," + csv_field(pair.direction()) + "," + fmt_score(s.clean) + "," +
         fmt_score(s.adv) + "," + fmt_score(s.mod) + "," + fmt_score(s.mod_adv) + "," + std::to_string(n_test) +
         ",ok";
}

std::string ssim_csv_row(const SsimReport& r) {
  return csv_field(r.pair.dataset_id) + "," + csv_field(r.pair.direction()) + "," +
         fmt_score(r.mean_individual_ssim) + "," + fmt_score(r.representative_ssim) + "," + std::to_string(r.n);
}

void write_scores_csv(const std::vector<MatrixRow>& rows, const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out << kScoresHeader << '\n';
  for (const auto& r : rows) {
    if (r.ok) {
      out << scores_csv_row(r.pair, r.report.scores, r.report.n_test) << '\n';
    } else {
      out << csv_field(r.pair.dataset_id) << ',' << csv_field(r.pair.direction()) << ",,,,,0,"
          << csv_field("failed: " + r.error) << '\n';
    }
  }
}

void write_ssim_csv(const std::vector<MatrixRow>& rows, const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out << kSsimHeader << '\n';
  for (const auto& r : rows) {
    if (r.ok) out << ssim_csv_row(r.report.ssim) << '\n';
  }
}

ExperimentReport run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  const fs::path out = cfg.output_dir;
  fs::create_directories(out);

  ExperimentReport report;
  report.pair = cfg.pair;
  report.output_dir = out;
  json manifest{{"format", "advregions-manifest"}, {"version", kManifestVersion}, {"config", cfg.to_json()}};
  auto record = [&](const std::string& name, const std::string& rel) { report.artifacts[name] = rel; };
  auto finish_manifest = [&](const std::string& status, const std::string& stage, const std::string& error) {
    json artifacts = json::array();
    for (const auto& [name, rel] : report.artifacts) {
      const fs::path p = out / rel;
      artifacts.push_back({{"name", name}, {"path", rel}, {"sha256", fs::exists(p) ? io::sha256_file(p) : ""}});
    }
    manifest["artifacts"] = artifacts;
    manifest["status"] = status;
    if (!stage.empty()) manifest["failed_stage"] = stage;
    if (!error.empty()) manifest["error"] = error;
    io::write_json(manifest, out / "manifest.json");
  };

  std::string stage;
  try {
    stage = "data";
    auto [train_set, test_set] = load_pair(cfg.pair, cfg.data);
    spdlog::info("{} {}: {} train / {} test images", cfg.pair.dataset_id, cfg.pair.direction(), train_set.size(),
                 test_set.size());

    stage = "train";
    const json key = model_cache_key(cfg);
    const std::string key_hash = io::sha256_hex(key.dump());
    const fs::path cache_root = cfg.cache_dir.empty() ? out / ".cache" : cfg.cache_dir;
    const fs::path cached = cache_root / key_hash / "model.bin";
    std::optional<Model> model;
    if (cfg.cache && fs::exists(cached)) {
      model = load_model(cached);
      report.model_from_cache = true;
      spdlog::info("model cache hit {}", key_hash.substr(0, 12));
    } else {
      model = train(train_set, cfg.model);
      if (cfg.cache) {
        save_model(*model, cached);
        io::write_json(key, cache_root / key_hash / "key.json");
      }
    }
    for (const auto& w : model->training_log().warnings) report.warnings.push_back("train: " + w);
    save_model(*model, out / "model.bin");
    record("model", "model.bin");
    manifest["model_key"] = key_hash;

    stage = "attack";
    const LabeledImageSet clean = source_subset(test_set, 0, cfg.seed);
    if (clean.empty()) throw ConfigError("no source-class test images");
    io::save_set(clean, out / "sets" / "test_clean.set");
    record("test_clean", "sets/test_clean.set");
    const auto adv_pairs = attack_set(*model, clean, cfg.attack);
    io::save_adversarial_set(adv_pairs, clean.class_names, cfg.attack, out / "sets" / "test_adv.set");
    record("test_adv", "sets/test_adv.set");

    stage = "segregate";
    const LabeledImageSet seg_images = source_subset(train_set, cfg.segregation.samples, cfg.seed);
    const Segregation seg = segregate(*model, seg_images, cfg.attack, cfg.segregation);
    report.ssim = roi_roa_similarity(seg.roi_masks, seg.roa_masks, cfg.pair);
    if (seg.degenerate_roi > 0) {
      report.warnings.push_back("segregate: " + std::to_string(seg.degenerate_roi) + " all-zero RoI maps");
    }
    for (const auto& [name, rel] : save_segregation(seg, cfg.segregation, cfg.pair, out / "segregation",
                                                    cfg.export_samples)) {
      record(name, "segregation/" + rel);
    }

    stage = "isolate";
    report.isolation = isolate(seg, cfg.blob);
    for (const auto& [name, rel] :
         save_isolation(report.isolation, seg, out / "isolation", cfg.export_samples)) {
      record(name, "isolation/" + rel);
    }
    record("regions", "isolation/regions.json");

    stage = "blob";
    const Blob blob = extract_blob(
        seg.rep_roi, seg.rep_roa, cfg.blob,
        BlobProvenance{cfg.pair, cfg.segregation.delta_roi, cfg.segregation.delta_roa,
                       static_cast<int>(seg_images.size())});
    if (blob.empty_warning) report.warnings.push_back("blob: empty blob, defense is the identity");
    report.blob_pixels = blob.mask.count();
    io::write_png(blob.mask, out / "blob.png");
    io::save_blob(blob, out / "blob.json");
    record("blob_png", "blob.png");
    record("blob", "blob.json");

    stage = "evaluate";
    report.scores = defense_eval(*model, clean, cfg.attack, blob);
    report.n_test = clean.size();
    {
      const LabeledImageSet mod = neutralize_set(clean, blob);
      io::save_set(mod, out / "sets" / "test_mod.set");
      record("test_mod", "sets/test_mod.set");
    }

    stage = "report";
    json scores = report.scores;
    scores["pair"] = cfg.pair;
    scores["n_test"] = report.n_test;
    scores["attack"] = cfg.attack;
    io::write_json(scores, out / "scores.json");
    record("scores_json", "scores.json");
    io::write_json(ssim_json(report.ssim), out / "ssim.json");
    record("ssim_json", "ssim.json");
    MatrixRow row{cfg.pair, true, {}, report};
    write_scores_csv({row}, out / "scores.csv");
    write_ssim_csv({row}, out / "ssim.csv");
    record("scores_csv", "scores.csv");
    record("ssim_csv", "ssim.csv");
    manifest["scores"] = report.scores;
    manifest["ssim"] = ssim_json(report.ssim);
    manifest["warnings"] = report.warnings;
    finish_manifest("ok", "", "");
  } catch (const std::exception& e) {
    try {
      finish_manifest("failed", stage, e.what());
    } catch (const std::exception& inner) {
      spdlog::error("could not write failure manifest: {}", inner.what());
    }
    throw StageError(stage, e.what());
  }
  return report;
}

std::vector<MatrixRow> run_matrix(const std::vector<ExperimentConfig>& configs, const fs::path& output_dir) {
  std::vector<MatrixRow> rows;
  for (ExperimentConfig cfg : configs) {
    if (cfg.cache_dir.empty()) cfg.cache_dir = output_dir / "cache";
    MatrixRow row{cfg.pair, false, {}, {}};
    try {
      row.report = run_experiment(cfg);
      row.ok = true;
    } catch (const std::exception& e) {
      row.error = e.what();
      spdlog::error("{} {} failed: {}", cfg.pair.dataset_id, cfg.pair.direction(), e.what());
    }
    rows.push_back(std::move(row));
  }
  write_scores_csv(rows, output_dir / "scores.csv");
  write_ssim_csv(rows, output_dir / "ssim.csv");
  return rows;
}

}  // namespace advregions
