#include "advregions/json.hpp"

#include "advregions/error.hpp"

namespace advregions {

using nlohmann::json;

void to_json(json& j, const PairSpec& p) {
  j = {{"dataset", p.dataset_id}, {"source", p.source_class}, {"target", p.target_class}};
}
void from_json(const json& j, PairSpec& p) {
  j.at("dataset").get_to(p.dataset_id);
  j.at("source").get_to(p.source_class);
  j.at("target").get_to(p.target_class);
}

void to_json(json& j, const ConvBlockConfig& c) {
  j = {{"filters", c.filters}, {"kernel", c.kernel}, {"stride", c.stride}, {"pool", c.pool}};
}
void from_json(const json& j, ConvBlockConfig& c) {
  c = ConvBlockConfig{};
  j.at("filters").get_to(c.filters);
  c.kernel = j.value("kernel", c.kernel);
  c.stride = j.value("stride", c.stride);
  c.pool = j.value("pool", c.pool);
}

void to_json(json& j, const ModelConfig& c) {
  j = {{"conv_blocks", c.conv_blocks},     {"dense_widths", c.dense_widths},
       {"learning_rate", c.learning_rate}, {"epochs", c.epochs},
       {"batch_size", c.batch_size},       {"seed", c.seed}};
}
void from_json(const json& j, ModelConfig& c) {
  c = ModelConfig{};
  if (j.contains("conv_blocks")) j.at("conv_blocks").get_to(c.conv_blocks);
  if (j.contains("dense_widths")) j.at("dense_widths").get_to(c.dense_widths);
  c.learning_rate = j.value("learning_rate", c.learning_rate);
  c.epochs = j.value("epochs", c.epochs);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.seed = j.value("seed", c.seed);
}

void to_json(json& j, const InputShape& s) {
  j = {{"channels", s.channels}, {"height", s.height}, {"width", s.width}};
}
void from_json(const json& j, InputShape& s) {
  j.at("channels").get_to(s.channels);
  j.at("height").get_to(s.height);
  j.at("width").get_to(s.width);
}

void to_json(json& j, const AttackConfig& c) {
  j = {{"method", "fgsm"}, {"epsilon", c.epsilon}, {"targeted", c.targeted}};
}
void from_json(const json& j, AttackConfig& c) {
  c = AttackConfig{};
  if (j.contains("method") && j.at("method") != "fgsm") {
    throw ConfigError("attack: only 'fgsm' is supported");
  }
  c.epsilon = j.value("epsilon", c.epsilon);
  c.targeted = j.value("targeted", c.targeted);
}

void to_json(json& j, const Threshold& t) {
  if (t.mode == Threshold::Mode::quantile) {
    j = t.to_string();
  } else {
    j = t.value;
  }
}
void from_json(const json& j, Threshold& t) {
  if (j.is_number()) {
    t = Threshold::absolute(j.get<double>());
  } else if (j.is_string()) {
    t = Threshold::parse(j.get<std::string>());
  } else {
    throw ConfigError("threshold must be a number or a \"q<quantile>\" string");
  }
}

void to_json(json& j, const ScoreQuad& s) {
  j = {{"score_clean", s.clean}, {"score_adv", s.adv}, {"score_mod", s.mod}, {"score_mod_adv", s.mod_adv}};
}
void from_json(const json& j, ScoreQuad& s) {
  j.at("score_clean").get_to(s.clean);
  j.at("score_adv").get_to(s.adv);
  j.at("score_mod").get_to(s.mod);
  j.at("score_mod_adv").get_to(s.mod_adv);
}

}  // namespace advregions
