#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "advregions/attack.hpp"
#include "advregions/classifier.hpp"
#include "advregions/data.hpp"
#include "advregions/isolation.hpp"
#include "advregions/metrics.hpp"
#include "advregions/neutralization.hpp"
#include "advregions/segregation.hpp"

namespace advregions {

enum class RepresentativeSource : std::uint8_t { masks, maps };

struct SegregationOptions {
  Threshold delta_roi = Threshold::quantile(0.85);
  Threshold delta_roa = Threshold::quantile(0.85);
  // Source-class training images used for segregation; 0 = all.
  int samples = 500;
  RepresentativeSource representative = RepresentativeSource::masks;
};

struct ExperimentConfig {
  PairSpec pair;
  DatasetOptions data;
  ModelConfig model;
  AttackConfig attack;
  SegregationOptions segregation;
  BlobOptions blob;
  std::uint64_t seed = 0;
  std::filesystem::path output_dir = "runs/experiment";
  bool cache = true;
  // Defaults to <output_dir>/.cache.
  std::filesystem::path cache_dir;
  // Individual masks / partitions written as PNG for inspection.
  int export_samples = 8;

  // Parses a config document. Missing keys take defaults; the blob fill value
  // defaults to 0 for the built-in dark-background datasets and 1 otherwise.
  // `seed` propagates into the data and model sections.
  static ExperimentConfig from_json(const nlohmann::json& doc);
  nlohmann::json to_json() const;
  void validate() const;
};

// Result of the segregation stage over a set of source-class images.
struct Segregation {
  std::vector<AdversarialPair> pairs;
  std::vector<SaliencyMap> roi_maps;
  std::vector<SaliencyMap> roa_maps;
  std::vector<BinaryMask> roi_masks;
  std::vector<BinaryMask> roa_masks;
  RepresentativeMap rep_roi;
  RepresentativeMap rep_roa;
  std::size_t degenerate_roi = 0;
  std::size_t degenerate_roa = 0;
};

Segregation segregate(const Model& model, const LabeledImageSet& images, const AttackConfig& attack,
                      const SegregationOptions& options);

// Writes mask stacks, representatives (JSON + PNG), segregation.json and the
// first export_samples per-image PNGs under dir. Returns name -> path relative
// to dir.
std::map<std::string, std::string> save_segregation(const Segregation& seg, const SegregationOptions& options,
                                                    const PairSpec& pair, const std::filesystem::path& dir,
                                                    int export_samples);
// Masks and representatives only; maps and adversarial pairs are not stored.
Segregation load_segregation(const std::filesystem::path& dir);

struct IsolationSummary {
  RegionPartition representative;  // representatives cut at theta
  RegionStats representative_stats;
  std::array<double, 4> mean_individual_fractions{};
};

IsolationSummary isolate(const Segregation& seg, const BlobOptions& blob);
std::map<std::string, std::string> save_isolation(const IsolationSummary& summary, const Segregation& seg,
                                                  const std::filesystem::path& dir, int export_samples);

struct ExperimentReport {
  PairSpec pair;
  ScoreQuad scores;
  std::size_t n_test = 0;
  SsimReport ssim;
  IsolationSummary isolation;
  std::size_t blob_pixels = 0;
  bool model_from_cache = false;
  std::vector<std::string> warnings;
  std::filesystem::path output_dir;
  // name -> path relative to output_dir
  std::map<std::string, std::string> artifacts;
};

// train -> attack -> segregate -> isolate -> blob -> evaluate, writing every
// intermediate plus manifest.json, scores.csv and ssim.csv to output_dir.
// Stage failures throw StageError; artifacts written so far are kept and the
// manifest records the failing stage.
ExperimentReport run_experiment(const ExperimentConfig& cfg);

struct MatrixRow {
  PairSpec pair;
  bool ok = false;
  std::string error;
  ExperimentReport report;
};

// Runs each config independently; a failing run is recorded and the rest
// proceed. Writes the combined scores.csv and ssim.csv into output_dir.
// Configs without an explicit cache_dir share <output_dir>/cache.
std::vector<MatrixRow> run_matrix(const std::vector<ExperimentConfig>& configs,
                                  const std::filesystem::path& output_dir);

// Report tables, one row per pair.
inline constexpr const char* kScoresHeader =
    "dataset,source_to_target,score_clean,score_adv,score_mod,score_mod_adv,n_test,status";
inline constexpr const char* kSsimHeader =
    "dataset,source_to_target,mean_individual_ssim,representative_ssim,n";

std::string scores_csv_row(const PairSpec& pair, const ScoreQuad& s, std::size_t n_test);
std::string ssim_csv_row(const SsimReport& r);
void write_scores_csv(const std::vector<MatrixRow>& rows, const std::filesystem::path& path);
void write_ssim_csv(const std::vector<MatrixRow>& rows, const std::filesystem::path& path);

// Source-class subset the defense is evaluated on ("source to target" attacks
// only source-class images).
LabeledImageSet source_subset(const LabeledImageSet& set, int cap, std::uint64_t seed);

}  // namespace advregions
