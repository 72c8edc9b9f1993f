#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>
#include <functional>
#include <limits>
#include <sstream>

#include "oracles.h"
#include "otter/error.h"
#include "otter/io.h"
#include "test_files.h"

namespace otter {
namespace {

using testfiles::ScratchDir;
using testfiles::Slurp;
using testfiles::Write;

ErrorCode CodeOf(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::kInvalidArgument;
}

TEST(ReadScores, ToyMatrix) {
  const auto dir = ScratchDir();
  const ScoreMatrix s = read_scores(Write(dir / "s.csv", "0.4,0.6\n0.1,0.9\n"));
  ASSERT_EQ(s.n(), 2u);
  ASSERT_EQ(s.k(), 2u);
  EXPECT_EQ(s(0, 0), 0.4);
  EXPECT_EQ(s(0, 1), 0.6);
  EXPECT_EQ(s(1, 0), 0.1);
  EXPECT_EQ(s(1, 1), 0.9);
}

TEST(ReadScores, HeaderIsSkipped) {
  const auto dir = ScratchDir();
  const ScoreMatrix a = read_scores(Write(dir / "a.csv", "0.4,0.6\n0.1,0.9\n"));
  const ScoreMatrix b = read_scores(Write(dir / "b.csv", "c1,c2\n0.4,0.6\n0.1,0.9"));
  EXPECT_EQ(a.values(), b.values());
  // Windows line endings and blank lines are tolerated.
  const ScoreMatrix c = read_scores(Write(dir / "c.csv", "c1,c2\r\n0.4,0.6\r\n\r\n0.1,0.9\r\n"));
  EXPECT_EQ(a.values(), c.values());
}

TEST(ReadScores, RaggedRowNamesRow) {
  const auto dir = ScratchDir();
  const std::string path = Write(dir / "r.csv", "c1,c2\n0.4,0.6\n0.1,0.8,0.1\n");
  try {
    read_scores(path);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kParseError);
    EXPECT_NE(std::string(e.what()).find("row 3"), std::string::npos) << e.what();
  }
}

TEST(ReadScores, BadCellNamesRowAndColumn) {
  std::istringstream in("0.4,0.6\n0.1,x\n");
  try {
    parse_csv_matrix(in, "mem");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kParseError);
    EXPECT_NE(std::string(e.what()).find("row 2, column 2"), std::string::npos) << e.what();
  }
}

TEST(ReadScores, ValidationErrorsPropagate) {
  const auto dir = ScratchDir();
  EXPECT_EQ(CodeOf([&] { read_scores(Write(dir / "n.csv", "-0.1,1.1\n")); }),
            ErrorCode::kNegativeEntry);
  EXPECT_EQ(CodeOf([&] { read_scores(Write(dir / "s.csv", "0.5,0.6\n")); }),
            ErrorCode::kRowSumViolation);
  EXPECT_EQ(CodeOf([&] { read_scores((dir / "missing.csv").string()); }), ErrorCode::kIoError);
  EXPECT_EQ(CodeOf([&] { read_scores(Write(dir / "e.csv", "a,b\n")); }), ErrorCode::kParseError);
}

TEST(ReadDistribution, CsvAndJsonAgree) {
  const auto dir = ScratchDir();
  const LabelDistribution a = read_distribution(Write(dir / "d.csv", "0.5,0.5\n"));
  const LabelDistribution b = read_distribution(Write(dir / "d.json", "{\"probs\": [0.5, 0.5]}"));
  EXPECT_EQ(a.probs(), (std::vector<double>{0.5, 0.5}));
  EXPECT_EQ(a, b);
  EXPECT_EQ(CodeOf([&] { read_distribution(Write(dir / "bad.csv", "0.5,0.6\n")); }),
            ErrorCode::kSimplexViolation);
  EXPECT_EQ(CodeOf([&] { read_distribution(Write(dir / "two.csv", "0.5,0.5\n0.5,0.5\n")); }),
            ErrorCode::kParseError);
  EXPECT_EQ(CodeOf([&] { read_distribution(Write(dir / "x.json", "{\"p\": [1]}")); }),
            ErrorCode::kParseError);
}

TEST(WritePredictions, Format) {
  std::ostringstream out;
  write_predictions(Predictions{{0, 1}, 2}, out);
  EXPECT_EQ(out.str(), "index,label\n1,1\n2,2\n");
}

TEST(WritePredictions, RoundTrip) {
  const auto dir = ScratchDir();
  oracle::Rng rng(3);
  Predictions p{{}, 7};
  for (int i = 0; i < 500; ++i) p.labels.push_back(static_cast<int>(oracle::Int(rng, 0, 6)));
  const std::string path = (dir / "p.csv").string();
  write_predictions(p, path);
  const Predictions q = read_labels(path, 7);
  EXPECT_EQ(q.labels, p.labels);
  EXPECT_EQ(q.k, 7u);
}

TEST(ReadLabels, SingleColumnAndInferredK) {
  const auto dir = ScratchDir();
  const Predictions p = read_labels(Write(dir / "y.csv", "label\n2\n1\n3\n"));
  EXPECT_EQ(p.labels, (std::vector<int>{1, 0, 2}));
  EXPECT_EQ(p.k, 3u);
  EXPECT_EQ(CodeOf([&] { read_labels(Write(dir / "z.csv", "0\n1\n")); }), ErrorCode::kParseError);
  EXPECT_EQ(CodeOf([&] { read_labels(Write(dir / "f.csv", "1.5\n")); }), ErrorCode::kParseError);
  EXPECT_EQ(CodeOf([&] { read_labels(Write(dir / "k.csv", "1\n4\n"), 3); }),
            ErrorCode::kInvalidArgument);
}

TEST(Probabilities, RoundTripLosslessly) {
  const auto dir = ScratchDir();
  oracle::Rng rng(9);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = oracle::Int(rng, 1, 40), k = oracle::Int(rng, 2, 9);
    const ScoreMatrix s = validate_scores(oracle::ScoreRows(rng, n, k));
    const std::string path = (dir / "s.csv").string();
    write_scores(s, path);
    EXPECT_EQ(read_scores(path).values(), s.values());

    const LabelDistribution nu = LabelDistribution::Create(oracle::Simplex(rng, k));
    write_distribution(nu, (dir / "d.csv").string());
    const LabelDistribution back = read_distribution((dir / "d.csv").string());
    for (std::size_t j = 0; j < k; ++j) EXPECT_NEAR(back[j], nu[j], 1e-12);
  }
}

TEST(FormatDouble, ShortestRoundTrip) {
  EXPECT_EQ(format_double(0.5), "0.5");
  EXPECT_EQ(format_double(0.1), "0.1");
  EXPECT_EQ(format_double(1.0), "1");
  for (double v : {1.0 / 3.0, 2.0 / 7.0, 1e-300, std::numeric_limits<double>::denorm_min()}) {
    EXPECT_EQ(std::strtod(format_double(v).c_str(), nullptr), v);
  }
}

TEST(Reweight, RoundTrip) {
  const auto dir = ScratchDir();
  const ReweightVector r = ReweightVector::Create({0.25, 1.0 / 3.0, 4.0});
  const std::string path = (dir / "r.json").string();
  write_reweight(r, 1.0, path);
  StoredReweight back = read_reweight(path);
  EXPECT_EQ(back.r.values(), r.values());
  EXPECT_EQ(back.temperature, 1.0);
  EXPECT_EQ(Slurp(path).find("temperature"), std::string::npos);

  write_reweight(r, 0.5, path);
  back = read_reweight(path);
  EXPECT_EQ(back.temperature, 0.5);
  EXPECT_EQ(CodeOf([&] { read_reweight(Write(dir / "bad.json", "{\"k\": 2, \"r\": [1]}")); }),
            ErrorCode::kParseError);
  EXPECT_EQ(CodeOf([&] { read_reweight(Write(dir / "neg.json", "{\"r\": [1, -1]}")); }),
            ErrorCode::kInvalidArgument);
}

TEST(ReadHierarchy, OneBasedGroups) {
  const auto dir = ScratchDir();
  const Hierarchy h = read_hierarchy(Write(dir / "h.json", "{\"groups\": [[1, 3], [2]]}"), 3);
  ASSERT_EQ(h.num_groups(), 2u);
  EXPECT_EQ(h.groups()[0], (std::vector<int>{0, 2}));
  EXPECT_EQ(h.groups()[1], (std::vector<int>{1}));
  EXPECT_EQ(h.group_of(2), 0);
  EXPECT_EQ(CodeOf([&] { read_hierarchy(Write(dir / "b.json", "[[1, 2]]"), 2); }),
            ErrorCode::kParseError);
  EXPECT_THROW(read_hierarchy(Write(dir / "gap.json", "{\"groups\": [[1], [3]]}"), 3), Error);
}

TEST(SweepCsv, Columns) {
  std::ostringstream out;
  write_sweep_csv({SweepRow{0.4, "otter", "score", 0.05, 3, 0.875}}, out);
  EXPECT_EQ(out.str(),
            "tv_distance,method,noise_kind,noise_level,seed,accuracy\n0.4,otter,score,0.05,3,0.875\n");
}

}  // namespace
}  // namespace otter
