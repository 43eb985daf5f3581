#include <filesystem>
#include <sstream>

#include <gtest/gtest.h>

#include "svkit/cli.hpp"

namespace svkit::cli {
namespace {

struct Result {
  int code;
  std::string out, err;
};

Result Svkit(std::vector<std::string> args) {
  args.insert(args.begin(), "svkit");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = Run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("svkit_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  std::string P(const std::string& name) const { return (dir_ / name).string(); }
  fs::path dir_;
};

TEST(CliUsage, NoArgumentsPrintsUsage) {
  const auto r = Svkit({});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("Usage"), std::string::npos);
}

TEST(CliUsage, EverySubcommandWithoutArgumentsPrintsUsage) {
  for (const char* sub : {"synth", "feats", "vad", "embed", "train-plda", "score", "snorm", "calibrate", "fuse",
                          "eval", "finetune-aam"}) {
    const auto r = Svkit({sub});
    EXPECT_EQ(r.code, 1) << sub;
    EXPECT_NE(r.err.find("Usage"), std::string::npos) << sub;
  }
}

TEST(CliUsage, BadFlagsAreUsageErrors) {
  EXPECT_EQ(Svkit({"frobnicate"}).code, 1);
  EXPECT_EQ(Svkit({"eval", "--scores"}).code, 1);
  EXPECT_EQ(Svkit({"synth", "--out", "/tmp/x", "--backend", "svm"}).code, 1);
  EXPECT_EQ(Svkit({"--help"}).code, 0);
}

TEST(Config, DefaultsAreThePublishedValues) {
  const PipelineConfig c;
  EXPECT_EQ(c.aam.scale, 30.0);
  EXPECT_EQ(c.aam.margin, 0.2);
  EXPECT_EQ(c.snorm.top_x, 300);
  EXPECT_EQ(c.backend.plda.speaker_rank, 312);
  EXPECT_EQ(c.backend.plda.channel_rank, 312);
  EXPECT_EQ(c.fusion_weights, (std::vector<double>{0.4, 0.4, 0.1, 0.1}));
  EXPECT_EQ(c.dcf.p_target, 0.05);
  EXPECT_EQ(c.features.num_filters, 40);
  EXPECT_EQ(c.features.num_plp_coeffs, 30);
}

TEST(Config, ParsesAndRejectsUnknownKeys) {
  PipelineConfig c;
  ApplyConfigText(c, "# comment\nbackend.kind = cosine\n\nsnorm.top_x=7  # trailing\nfusion.weights = 1,2\n");
  EXPECT_EQ(c.backend.scoring, backend::Scoring::kCosine);
  EXPECT_EQ(c.snorm.top_x, 7);
  EXPECT_EQ(c.fusion_weights, (std::vector<double>{1, 2}));
  try {
    ApplyConfigText(c, "seed = 1\nplda.rank = 3\n", "cfg");
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("cfg line 2"), std::string::npos) << e.what();
    EXPECT_NE(std::string(e.what()).find("plda.rank"), std::string::npos);
  }
  EXPECT_THROW(ApplyConfigText(c, "snorm.top_x = many\n"), Error);
  EXPECT_THROW(ApplyConfigText(c, "just words\n"), Error);
  EXPECT_THROW(ApplyConfigText(c, "feature.kind = mfcc\n"), Error);
}

TEST_F(CliTest, UnknownConfigKeyIsDataError) {
  WriteFile(P("cfg"), "bogus = 1\n");
  const auto r = Svkit({"synth", "--config", P("cfg"), "--out", P("d")});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("bogus"), std::string::npos);
}

TEST_F(CliTest, EvalSeparatedScores) {
  WriteFile(P("key"), "1 a b\n0 a c\n1 d e\n");
  WriteFile(P("s"), "a b 3\na c -1\nd e 2.5\n");
  const auto r = Svkit({"eval", "--scores", P("s"), "--key", P("key"), "--det-out", P("det")});
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.out, "EER=0.000%  minDCF(p=0.05)=0.0000\n");
  EXPECT_EQ(ReadFile(P("det")), "0 1\n0 0\n0.5 0\n1 0\n");
  const auto p = Svkit({"eval", "--scores", P("s"), "--key", P("key"), "--dcf-ptarget", "0.01"});
  EXPECT_NE(p.out.find("minDCF(p=0.01)"), std::string::npos);
}

TEST_F(CliTest, EvalReportsLineOfBadTrial) {
  WriteFile(P("key"), "1 a b\n2 a c\n");
  WriteFile(P("s"), "a b 3\na c -1\n");
  const auto r = Svkit({"eval", "--scores", P("s"), "--key", P("key")});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("line 2"), std::string::npos) << r.err;
}

TEST_F(CliTest, FuseSingleInputIsByteIdentical) {
  const std::string text = "a b 0.10000000000000001\nc d -3.25\ne f 12345.678901234567\n";
  WriteFile(P("s"), text);
  ASSERT_EQ(Svkit({"fuse", "--scores", P("s"), "--weights", "1", "--out", P("f")}).code, 0);
  EXPECT_EQ(ReadFile(P("f")), text);
}

TEST_F(CliTest, FuseModelAndWeightCountErrors) {
  WriteFile(P("s"), "a b 1\nc d 2\n");
  WriteFile(P("m"), "weight_0=2\noffset=-1\n");
  ASSERT_EQ(Svkit({"fuse", "--scores", P("s"), "--model", P("m"), "--out", P("f")}).code, 0);
  EXPECT_EQ(ReadFile(P("f")), "a b 1\nc d 3\n");
  // Default weights are four; one input does not match.
  EXPECT_EQ(Svkit({"fuse", "--scores", P("s"), "--out", P("f")}).code, 2);
}

TEST_F(CliTest, ScoreNamesMissingUtterance) {
  WriteFile(P("cfg"), "synth.num_speakers = 3\nsynth.utts_per_speaker = 3\nsynth.dim = 4\n"
                      "synth.speaker_rank = 2\nsynth.channel_rank = 1\nbackend.kind = cosine\n");
  ASSERT_EQ(Svkit({"synth", "--config", P("cfg"), "--kind", "plda", "--out", P("d")}).code, 0);
  ASSERT_EQ(Svkit({"train-plda", "--config", P("cfg"), "--embeddings", P("d/embeddings.svw"), "--utt2spk",
                   P("d/utt2spk"), "--out", P("be")}).code, 0);
  WriteFile(P("t"), "spk000-utt000 nobody\n");
  const auto r = Svkit({"score", "--model", P("be"), "--embeddings", P("d/embeddings.svw"), "--trials", P("t"),
                        "--out", P("s")});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("nobody"), std::string::npos);
}

TEST_F(CliTest, PldaBackendOnSyntheticEmbeddings) {
  WriteFile(P("cfg"), "synth.num_speakers = 20\nsynth.utts_per_speaker = 6\nsynth.dim = 8\n"
                      "synth.speaker_rank = 3\nsynth.channel_rank = 2\nsynth.num_target = 100\n"
                      "synth.num_nontarget = 300\nplda.speaker_rank = 3\nplda.channel_rank = 2\nsnorm.top_x = 10\n");
  ASSERT_EQ(Svkit({"synth", "--config", P("cfg"), "--kind", "plda", "--out", P("d")}).code, 0);
  const auto t = Svkit({"train-plda", "--config", P("cfg"), "--embeddings", P("d/embeddings.svw"), "--utt2spk",
                        P("d/utt2spk"), "--out", P("be")});
  ASSERT_EQ(t.code, 0) << t.err;
  EXPECT_NE(t.out.find("iteration 10 log-likelihood"), std::string::npos);
  const auto store = LoadTensors(P("be"));
  for (const char* n : {"center.mean", "lda.mat", "plda.mu", "plda.V", "plda.U", "plda.psi", "cohort.means"})
    EXPECT_TRUE(store.Has(n)) << n;
  ASSERT_EQ(Svkit({"score", "--config", P("cfg"), "--model", P("be"), "--embeddings", P("d/embeddings.svw"),
                   "--trials", P("d/trials"), "--out", P("raw")}).code, 0);
  ASSERT_EQ(Svkit({"snorm", "--config", P("cfg"), "--model", P("be"), "--embeddings", P("d/embeddings.svw"),
                   "--scores", P("raw"), "--out", P("sn"), "--cohort-scores", P("cs.svf")}).code, 0);
  EXPECT_EQ(ReadFeatures(P("cs.svf")).values.cols(), 20);
  const auto e = Svkit({"eval", "--scores", P("sn"), "--key", P("d/trials")});
  ASSERT_EQ(e.code, 0);
  EXPECT_EQ(e.out.rfind("EER=", 0), 0u);
  ASSERT_EQ(Svkit({"finetune-aam", "--config", P("cfg"), "--embeddings", P("d/embeddings.svw"), "--utt2spk",
                   P("d/utt2spk"), "--out", P("head")}).code, 0);
  EXPECT_TRUE(LoadTensors(P("head")).Has("aam.weight"));
}

/// synth -> feats -> vad -> embed -> train -> score -> snorm -> calibrate -> eval
void RunChain(const std::function<std::string(const std::string&)>& p, const std::string& arch) {
  const std::string cfg = p("cfg");
  auto ok = [](const Result& r) {
    ASSERT_EQ(r.code, 0) << r.err;
  };
  ok(Svkit({"synth", "--config", cfg, "--out", p("data")}));
  ok(Svkit({"feats", "--config", cfg, "--wav-scp", p("data/wav.scp"), "--out", p("feats")}));
  ok(Svkit({"vad", "--config", cfg, "--wav-scp", p("data/wav.scp"), "--feats-scp", p("feats/feats.scp"), "--out",
            p("vad")}));
  ok(Svkit({"embed", "--config", cfg, "--arch", arch, "--feats-scp", p("vad/feats.scp"), "--out", p("emb.svw")}));
  ok(Svkit({"train-plda", "--config", cfg, "--embeddings", p("emb.svw"), "--utt2spk", p("data/utt2spk"), "--out",
            p("be.svw")}));
  ok(Svkit({"score", "--config", cfg, "--model", p("be.svw"), "--embeddings", p("emb.svw"), "--trials",
            p("data/trials"), "--out", p("raw.txt")}));
  ok(Svkit({"snorm", "--config", cfg, "--model", p("be.svw"), "--embeddings", p("emb.svw"), "--scores",
            p("raw.txt"), "--out", p("snorm.txt")}));
  ok(Svkit({"calibrate", "--config", cfg, "--scores", p("snorm.txt"), "--key", p("data/trials"), "--out",
            p("cal.txt"), "--model-out", p("cal.model")}));
  ok(Svkit({"eval", "--config", cfg, "--scores", p("cal.txt"), "--key", p("data/trials"), "--metrics-out",
            p("metrics.txt")}));
}

TEST_F(CliTest, EndToEndIsDeterministic) {
  for (const char* run : {"a", "b"}) {
    fs::create_directories(dir_ / run);
    WriteFile(P(std::string(run) + "/cfg"), "backend.kind = cosine\nsnorm.top_x = 3\nsynth.duration = 1.0\nseed = 5\n");
    RunChain([&](const std::string& f) { return P(std::string(run) + "/" + f); }, "tdnn-standard");
  }
  EXPECT_EQ(fs::directory_iterator(dir_ / "a/data/wav") != fs::directory_iterator(), true);
  for (const char* f : {"data/trials", "emb.svw", "raw.txt", "snorm.txt", "cal.txt", "cal.model", "metrics.txt",
                        "vad/vad.txt"})
    EXPECT_EQ(ReadFile(P(std::string("a/") + f)), ReadFile(P(std::string("b/") + f))) << f;
  EXPECT_EQ(ReadTable(P("a/data/wav.scp"), false).size(), 20u);
}

TEST_F(CliTest, FlagsOverrideConfig) {
  WriteFile(P("cfg"), "synth.num_speakers = 3\nsynth.utts_per_speaker = 3\nsynth.dim = 4\n"
                      "synth.speaker_rank = 2\nsynth.channel_rank = 1\nbackend.kind = plda\n");
  ASSERT_EQ(Svkit({"synth", "--config", P("cfg"), "--kind", "plda", "--out", P("d")}).code, 0);
  // PLDA with the default ranks cannot fit 4-dim data; --backend cosine wins.
  EXPECT_EQ(Svkit({"train-plda", "--config", P("cfg"), "--embeddings", P("d/embeddings.svw"), "--utt2spk",
                   P("d/utt2spk"), "--out", P("be")}).code, 2);
  EXPECT_EQ(Svkit({"train-plda", "--config", P("cfg"), "--backend", "cosine", "--embeddings",
                   P("d/embeddings.svw"), "--utt2spk", P("d/utt2spk"), "--out", P("be")}).code, 0);
  EXPECT_FALSE(LoadTensors(P("be")).Has("plda.V"));
  ASSERT_EQ(Svkit({"synth", "--config", P("cfg"), "--seed", "9", "--kind", "plda", "--out", P("d9")}).code, 0);
  EXPECT_NE(ReadFile(P("d/embeddings.svw")), ReadFile(P("d9/embeddings.svw")));
  // top_x below 2 is rejected once the flag is applied.
  const auto r = Svkit({"synth", "--snorm-x", "1", "--out", P("z")});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("top_x"), std::string::npos);
}

}  // namespace
}  // namespace svkit::cli
