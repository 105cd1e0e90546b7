// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include "gcnm/checkpoint.hpp"
#include "gcnm/error.hpp"
#include "gcnm/trainer.hpp"
#include "test_support.hpp"

using namespace gcnm;

namespace {

ModelConfig cfg() {
  ModelConfig c;
  c.d = 4;
  c.head_hidden = 8;
  c.blocks = 2;
  c.tau = 8;
  c.horizon = 4;
  c.n_h = 1;
  c.n_d = 1;
  c.n_w = 0;
  c.batch_size = 8;
  c.max_epochs = 3;
  c.learning_rate = 0.003;
  c.seed = 12;
  return c;
}

struct TrainSetup {
  std::unique_ptr<test::Fixture> fx;
  std::unique_ptr<WindowSet> train, val;
  explicit TrainSetup(const ModelConfig& c) : fx(test::make_fixture(c, 4, 6, 60, 0.2, 2)) {
    std::vector<std::size_t> tr(fx->windows.train.anchors.begin(), fx->windows.train.anchors.begin() + 24);
    train = std::make_unique<WindowSet>(*fx->assembler, tr, true);
    val = std::make_unique<WindowSet>(*fx->assembler, fx->windows.val.anchors, true);
  }
};

std::filesystem::path tmp(const std::string& name) { return std::filesystem::temp_directory_path() / name; }

}  // namespace

TEST(Trainer, SameSeedSameParameters) {
  const auto c = cfg();
  TrainSetup s(c);
  auto a = make_model(c, 4, 1, s.fx->graph);
  auto b = make_model(c, 4, 1, s.fx->graph);
  Trainer ta(*a, TrainOptions::from_config(c)), tb(*b, TrainOptions::from_config(c));
  const auto ra = ta.fit(*s.train, *s.val);
  const auto rb = tb.fit(*s.train, *s.val);
  EXPECT_EQ(a->parameters().checksum(), b->parameters().checksum());
  ASSERT_EQ(ra.history.size(), rb.history.size());
  for (std::size_t i = 0; i < ra.history.size(); ++i) EXPECT_EQ(ra.history[i].val_mae, rb.history[i].val_mae);
}

TEST(Trainer, PatienceZeroStopsAtFirstNonImprovement) {
  auto c = cfg();
  c.patience = 0;
  c.max_epochs = 60;
  c.learning_rate = 0.05;
  TrainSetup s(c);
  auto m = make_model(c, 4, 1, s.fx->graph);
  Trainer t(*m, TrainOptions::from_config(c));
  const auto r = t.fit(*s.train, *s.val);
  ASSERT_GE(r.history.size(), 1u);
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i + 1 < r.history.size(); ++i) {
    EXPECT_LT(r.history[i].val_mae, best) << "epoch " << i + 1 << " did not improve but training continued";
    best = r.history[i].val_mae;
  }
  if (static_cast<int>(r.history.size()) < c.max_epochs) EXPECT_GE(r.history.back().val_mae, best);
  EXPECT_DOUBLE_EQ(evaluate_mae(*m, *s.val), r.best_val);  // best parameters restored
}

TEST(Trainer, NonFiniteParametersReportDivergence) {
  const auto c = cfg();
  TrainSetup s(c);
  auto m = make_model(c, 4, 1, s.fx->graph);
  m->parameters().find("head.fc1_b")->value(0, 0) = std::numeric_limits<double>::infinity();
  Trainer t(*m, TrainOptions::from_config(c));
  const auto r = t.fit(*s.train, *s.val);
  EXPECT_TRUE(r.diverged);
  EXPECT_FALSE(r.message.empty());
}

TEST(Checkpoint, HeaderAndRoundTrip) {
  const auto c = cfg();
  TrainSetup s(c);
  auto m = make_model(c, 4, 1, s.fx->graph);
  Trainer t(*m, TrainOptions::from_config(c));
  t.fit(*s.train, *s.val);
  const auto path = tmp("gcnm_ckpt_test.gcnm");
  write_checkpoint(path, t.checkpoint({{"note", "x"}}));
  {
    std::ifstream in(path, std::ios::binary);
    char magic[5];
    in.read(magic, 5);
    EXPECT_EQ(std::string(magic, 5), "GCNM1");
  }
  const Checkpoint cp = read_checkpoint(path);
  EXPECT_EQ(cp.meta.at("note"), "x");
  EXPECT_EQ(cp.meta.at("epochs_done"), t.epochs_done());
  auto fresh = make_model(c, 4, 1, s.fx->graph);
  load_parameters(fresh->parameters(), cp);
  EXPECT_EQ(fresh->parameters().checksum(), m->parameters().checksum());
  std::filesystem::remove(path);
}

TEST(Checkpoint, TruncatedFileRejected) {
  const auto path = tmp("gcnm_ckpt_bad.gcnm");
  std::ofstream(path, std::ios::binary) << "GCNM1\x05";
  EXPECT_THROW(read_checkpoint(path), DataError);
  std::ofstream(path, std::ios::binary) << "NOPE!";
  EXPECT_THROW(read_checkpoint(path), DataError);
  std::filesystem::remove(path);
}

TEST(Checkpoint, ShapeMismatchIsSchemaError) {
  auto c = cfg();
  TrainSetup s(c);
  auto m = make_model(c, 4, 1, s.fx->graph);
  Trainer t(*m, TrainOptions::from_config(c));
  const Checkpoint cp = t.checkpoint();
  c.d = 5;
  auto other = make_model(c, 4, 1, s.fx->graph);
  EXPECT_THROW(load_parameters(other->parameters(), cp), SchemaError);
}

TEST(Trainer, ResumeContinuesEpochNumbering) {
  auto c = cfg();
  c.max_epochs = 2;
  c.patience = 50;
  TrainSetup s(c);
  auto m = make_model(c, 4, 1, s.fx->graph);
  Trainer first(*m, TrainOptions::from_config(c));
  first.fit(*s.train, *s.val);
  ASSERT_EQ(first.epochs_done(), 2);
  const Checkpoint cp = first.checkpoint();

  c.max_epochs = 4;
  auto m2 = make_model(c, 4, 1, s.fx->graph);
  Trainer second(*m2, TrainOptions::from_config(c));
  second.resume(cp);
  EXPECT_EQ(second.epochs_done(), 2);
  const auto r = second.fit(*s.train, *s.val);
  ASSERT_EQ(r.history.size(), 4u);
  EXPECT_EQ(r.history[2].epoch, 3);
  EXPECT_EQ(r.history[3].epoch, 4);
}

TEST(Trainer, HistoryCsv) {
  std::ostringstream out;
  write_history_csv({{1, 0.5, 0.25, 1.5}}, out);
  EXPECT_EQ(out.str().substr(0, 31), "epoch,train_mae,val_mae,seconds");
}
