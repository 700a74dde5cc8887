#include <gtest/gtest.h>

#include <cstring>
#include <limits>

#include "files.hpp"
#include "morphtag/checkpoint.hpp"
#include "morphtag/error.hpp"
#include "morphtag/model_io.hpp"
#include "morphtag/trainer.hpp"
#include "synthetic.hpp"

namespace morphtag {
namespace {

CheckpointData sample_data() {
  CheckpointData d;
  d.metadata = {{"component", "test"}, {"note", "ünïcode"}};
  d.tensors.push_back({"a", DType::f32, Shape{2, 2}, {1.5, -0.0, std::numeric_limits<float>::denorm_min(), double(3e38f)}});
  d.tensors.push_back({"b", DType::f64, Shape{3}, {0.1, -1e-300, 1.0 / 3.0}});
  d.tensors.push_back({"empty", DType::f32, Shape{0, 4}, {}});
  return d;
}

CheckpointError::Kind kind_of(std::string_view bytes) {
  try {
    deserialize_checkpoint(bytes);
  } catch (const CheckpointError& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no error";
  return CheckpointError::Kind::malformed;
}

TEST(Checkpoint, ContainerRoundTripIsBitExact) {
  const CheckpointData d = sample_data();
  const std::string bytes = serialize_checkpoint(d);
  EXPECT_EQ(bytes.substr(0, 4), "MTCK");
  const CheckpointData back = deserialize_checkpoint(bytes);
  EXPECT_EQ(back.metadata, d.metadata);
  ASSERT_EQ(back.tensors.size(), d.tensors.size());
  for (std::size_t i = 0; i < d.tensors.size(); ++i) {
    EXPECT_EQ(back.tensors[i].name, d.tensors[i].name);
    EXPECT_EQ(back.tensors[i].dtype, d.tensors[i].dtype);
    EXPECT_EQ(back.tensors[i].shape, d.tensors[i].shape);
    ASSERT_EQ(back.tensors[i].values.size(), d.tensors[i].values.size());
    EXPECT_EQ(std::memcmp(back.tensors[i].values.data(), d.tensors[i].values.data(),
                          d.tensors[i].values.size() * sizeof(double)),
              0);
  }
  EXPECT_EQ(serialize_checkpoint(back), bytes);
  EXPECT_NE(back.find("b"), nullptr);
  EXPECT_EQ(back.find("c"), nullptr);
}

TEST(Checkpoint, BadMagic) {
  std::string bytes = serialize_checkpoint(sample_data());
  bytes[0] = 'X';
  EXPECT_EQ(kind_of(bytes), CheckpointError::Kind::bad_magic);
  EXPECT_EQ(kind_of(""), CheckpointError::Kind::bad_magic);
  EXPECT_EQ(kind_of("{\"json\": true}"), CheckpointError::Kind::bad_magic);
}

TEST(Checkpoint, VersionMismatch) {
  std::string bytes = serialize_checkpoint(sample_data());
  bytes[4] = char(kCheckpointVersion + 1);
  EXPECT_EQ(kind_of(bytes), CheckpointError::Kind::version_mismatch);
}

TEST(Checkpoint, EveryTruncationIsTruncated) {
  const std::string bytes = serialize_checkpoint(sample_data());
  for (std::size_t n = 4; n < bytes.size(); ++n) {
    EXPECT_EQ(kind_of(std::string_view(bytes).substr(0, n)), CheckpointError::Kind::truncated) << n;
  }
}

TEST(Checkpoint, TrailingBytesAndBadMetadata) {
  EXPECT_EQ(kind_of(serialize_checkpoint(sample_data()) + "x"), CheckpointError::Kind::malformed);
  std::string bytes = serialize_checkpoint(sample_data());
  bytes[16] = '#';  // first metadata byte
  EXPECT_EQ(kind_of(bytes), CheckpointError::Kind::malformed);
}

TEST(Checkpoint, MissingFileIsIoError) { EXPECT_THROW(read_checkpoint("/nonexistent/model.ckpt"), IoError); }

struct Trained {
  Corpus corpus;
  std::shared_ptr<const GrammemeLexicon> lexicon;
  TaggerModel<float> model;
};

Trained trained_model(bool crf) {
  const testing::SyntheticLanguage lang({.tags = 5, .stems_per_tag = 4});
  Trained t;
  t.corpus = lang.sample(12, 1);
  t.lexicon = std::make_shared<const GrammemeLexicon>(lang.lexicon());
  TrainConfig cfg = testing::tiny_train_config();
  cfg.model.features.use_grammemes = true;
  cfg.model.use_crf = crf;
  cfg.max_epochs = 2;
  Rng rng(1);
  TaggerModel<float> model(cfg.model, build_vocabs(t.corpus), t.lexicon, rng);
  t.model = train(std::move(model), t.corpus, t.corpus, cfg).model;
  return t;
}

TEST(TaggerCheckpoint, SaveLoadDecodeIsBitExact) {
  for (bool crf : {false, true}) {
    Trained t = trained_model(crf);
    testing::TempDir dir;
    save_tagger(dir.file("m.ckpt"), t.model, {{"lexicon_path", "unused"}});
    TaggerModel<float> back = load_tagger<float>(dir.file("m.ckpt"), t.lexicon);
    const auto a = t.model.parameters().all(), b = back.parameters().all();
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
      EXPECT_EQ(a[i]->name, b[i]->name);
      EXPECT_TRUE(bit_identical(a[i]->value, b[i]->value)) << a[i]->name;
    }
    const auto batch = t.model.make_batches(t.corpus, 12)[0];
    Graph<float> g1(false), g2(false);
    Rng r(0);
    EXPECT_TRUE(bit_identical(t.model.forward(g1, batch, Mode::eval, r).logits.value(),
                              back.forward(g2, batch, Mode::eval, r).logits.value()));
    EXPECT_EQ(t.model.tag_corpus(t.corpus, 4), back.tag_corpus(t.corpus, 4));
    EXPECT_EQ(back.vocabs().tags, t.model.vocabs().tags);
    EXPECT_EQ(back.config(), t.model.config());
  }
}

TEST(TaggerCheckpoint, LexiconMustMatchSavedCategories) {
  Trained t = trained_model(false);
  const CheckpointData data = tagger_checkpoint(t.model);
  auto other = std::make_shared<GrammemeLexicon>();
  other->add("x", "NOUN|Case=Nom", 1.0);
  EXPECT_THROW(tagger_from_checkpoint<float>(data, other), ConfigError);
  EXPECT_THROW(tagger_from_checkpoint<float>(data), ConfigError);
}

TEST(TaggerCheckpoint, MissingTensorIsMalformed) {
  Trained t = trained_model(false);
  CheckpointData data = tagger_checkpoint(t.model);
  data.tensors.pop_back();
  try {
    tagger_from_checkpoint<float>(data, t.lexicon);
    FAIL();
  } catch (const CheckpointError& e) {
    EXPECT_EQ(e.kind(), CheckpointError::Kind::malformed);
  }
  data.metadata["component"] = "char_encoder";
  EXPECT_THROW(tagger_from_checkpoint<float>(data, t.lexicon), CheckpointError);
}

}  // namespace
}  // namespace morphtag
