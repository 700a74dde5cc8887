#include <gtest/gtest.h>

#include "morphtag/config.hpp"
#include "morphtag/error.hpp"

namespace morphtag {
namespace {

using nlohmann::json;

TEST(Config, TrainRoundTrip) {
  TrainConfig c;
  c.model.features.use_grammemes = true;
  c.model.features.char_ff_output_activation = Activation::tanh;
  c.model.use_crf = true;
  c.lambda_pos = 0.25;
  c.lexicon_path = "lex.tsv";
  const TrainConfig back = train_config_from_json(to_json(c));
  EXPECT_EQ(back.model, c.model);
  EXPECT_EQ(to_json(back), to_json(c));
}

TEST(Config, MissingKeysKeepDefaults) {
  const TrainConfig c = train_config_from_json(json::parse(R"({"batch_size": 8})"));
  EXPECT_EQ(c.batch_size, 8u);
  EXPECT_EQ(c.model, ModelConfig{});
}

TEST(Config, UnknownKeyRejected) {
  EXPECT_THROW(train_config_from_json(json::parse(R"({"batchsize": 8})")), ConfigError);
  EXPECT_THROW(model_config_from_json(json::parse(R"({"learning_rate": 0.1})")), ConfigError);
}

TEST(Config, WrongTypeRejected) {
  EXPECT_THROW(train_config_from_json(json::parse(R"({"batch_size": "big"})")), ConfigError);
  EXPECT_THROW(train_config_from_json(json::parse(R"({"char_ff_output_activation": "swish"})")), ConfigError);
}

TEST(Config, ValidationErrors) {
  EXPECT_THROW(train_config_from_json(json::parse(R"({"dropout": 1.0})")), ConfigError);
  EXPECT_THROW(train_config_from_json(json::parse(R"({"lambda_pos": -0.1})")), ConfigError);
  EXPECT_THROW(train_config_from_json(json::parse(R"({"use_char_ff": true, "use_char_bilstm": true})")),
               ConfigError);
  EXPECT_THROW(pretrain_config_from_json(json::parse(R"({"use_char_ff": false, "use_grammemes": true})")),
               ConfigError);
}

TEST(Config, Overrides) {
  json j = to_json(TrainConfig{});
  apply_override(j, "lambda_pos=0.5");
  apply_override(j, "use_crf=true");
  apply_override(j, "lexicon_path=data/lex.tsv");
  const TrainConfig c = train_config_from_json(j);
  EXPECT_EQ(c.lambda_pos, 0.5);
  EXPECT_TRUE(c.model.use_crf);
  EXPECT_EQ(c.lexicon_path, "data/lex.tsv");
  EXPECT_THROW(apply_override(j, "no_equals_sign"), ConfigError);
}

}  // namespace
}  // namespace morphtag
