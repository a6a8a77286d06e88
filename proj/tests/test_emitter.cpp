// Copyright 2026 The chartcf Authors.
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include "chartcf/emitter.hpp"
#include "chartcf/encoding.hpp"
#include "chartcf/error.hpp"
#include "chartcf/jsonl.hpp"
#include "corpus.hpp"

using namespace chartcf;
using namespace chartcf::testing;
namespace fs = std::filesystem;

namespace {

fs::path solid_png(const fs::path& file, std::uint8_t shade) {
  RgbaImage img{8, 8, std::vector<std::uint8_t>(8 * 8 * 4, shade)};
  write_png(file, img);
  return file;
}

std::vector<CounterfactualPair> four_pairs(const fs::path& dir) {
  std::vector<CounterfactualPair> out;
  for (int i = 0; i < 4; ++i) {
    CounterfactualPair p;
    p.seed.id = "00000" + std::to_string(i);
    p.seed.question = "Question " + std::to_string(i);
    p.seed.image = solid_png(dir / (p.seed.id + "-o.png"), static_cast<std::uint8_t>(10 + i));
    p.counterfactual.image = solid_png(dir / (p.seed.id + "-c.png"),
                                       static_cast<std::uint8_t>(100 + i));
    if (i % 2) {
      p.seed.question_type = QuestionType::kReasoning;
      p.seed.answer = "3.4";
      p.seed.reasoning = "15.3 - 11.9 = 3.4.";
      p.counterfactual.answer = "8.9";
      p.counterfactual.reasoning = "19.1 - 10.2 = 8.9.";
    } else {
      p.seed.answer = "Sculpture Wave Patterns";
      p.counterfactual.answer = "Dynamic Wave Effects";
    }
    out.push_back(p);
  }
  return out;
}

ErrorCode error_of(const std::vector<CounterfactualPair>& pairs) {
  try {
    build_records(pairs, EmitMode::kBoth, false);
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return ErrorCode::kIoError;
}

}  // namespace

TEST_CASE("four pairs give four records of each kind") {
  const auto pairs = four_pairs(fresh_dir("emit4"));
  const auto r = build_records(pairs, EmitMode::kBoth, false);
  CHECK(r.text.size() == 4);
  CHECK(r.image.size() == 4);
  const auto sym = build_records(pairs, EmitMode::kBoth, true);
  CHECK(sym.text.size() == 8);
  CHECK(sym.image.size() == 8);
  CHECK(build_records(pairs, EmitMode::kText, false).image.empty());
  CHECK(build_records(pairs, EmitMode::kImage, false).text.empty());
}

TEST_CASE("record contents follow the two preference directions") {
  const auto pairs = four_pairs(fresh_dir("emit-content"));
  const auto r = build_records(pairs, EmitMode::kBoth, true);
  const auto& t = r.text[0];
  CHECK(t.pair_id == "000000");
  CHECK(t.image == fs::absolute(pairs[0].seed.image));
  CHECK(t.chosen == "Sculpture Wave Patterns");
  CHECK(t.rejected == "Dynamic Wave Effects");
  const auto& im = r.image[0];
  CHECK(im.chosen_image == fs::absolute(pairs[0].seed.image));
  CHECK(im.rejected_image == fs::absolute(pairs[0].counterfactual.image));
  CHECK(im.response == t.chosen);
  CHECK(im.question == t.question);

  const auto& reasoning = r.text[2];
  CHECK(reasoning.pair_id == "000001");
  CHECK(reasoning.chosen == "Reasoning Process: 15.3 - 11.9 = 3.4.\nAnswer: 3.4");
  CHECK(reasoning.rejected == "Reasoning Process: 19.1 - 10.2 = 8.9.\nAnswer: 8.9");

  const auto& mirror = r.text[1];
  CHECK(mirror.pair_id == "000000:mirror");
  CHECK(mirror.image == fs::absolute(pairs[0].counterfactual.image));
  CHECK(mirror.chosen == "Dynamic Wave Effects");
  const auto& image_mirror = r.image[1];
  CHECK(image_mirror.chosen_image == fs::absolute(pairs[0].counterfactual.image));
  CHECK(image_mirror.response == "Dynamic Wave Effects");
}

TEST_CASE("text and image records agree pair by pair") {
  const auto pairs = four_pairs(fresh_dir("emit-cross"));
  const auto r = build_records(pairs, EmitMode::kBoth, true);
  REQUIRE(r.text.size() == r.image.size());
  for (std::size_t i = 0; i < r.text.size(); ++i) {
    CHECK(r.text[i].pair_id == r.image[i].pair_id);
    CHECK(r.text[i].image == r.image[i].chosen_image);
    CHECK(r.text[i].chosen == r.image[i].response);
    CHECK(r.text[i].chosen != r.text[i].rejected);
  }
}

TEST_CASE("format_response") {
  CHECK(format_response(QuestionType::kDescriptive, "42", std::nullopt) == "42");
  CHECK(format_response(QuestionType::kReasoning, "8.9", std::string("a")) ==
        "Reasoning Process: a\nAnswer: 8.9");
  CHECK_THROWS_AS(format_response(QuestionType::kReasoning, "8.9", std::nullopt), Error);
}

TEST_CASE("invalid pairs are rejected") {
  const fs::path dir = fresh_dir("emit-bad");
  auto pairs = four_pairs(dir);
  pairs[1].counterfactual.image = dir / "missing.png";
  CHECK(error_of(pairs) == ErrorCode::kMissingImage);

  pairs = four_pairs(dir);
  pairs[1].counterfactual.reasoning.reset();
  CHECK(error_of(pairs) == ErrorCode::kFormattingError);

  pairs = four_pairs(dir);
  pairs[0].counterfactual.answer = " Sculpture Wave Patterns ";
  CHECK(error_of(pairs) == ErrorCode::kFormattingError);

  pairs = four_pairs(dir);
  pairs[2].counterfactual.image = pairs[2].seed.image;
  CHECK(error_of(pairs) == ErrorCode::kFormattingError);
}

TEST_CASE("written files round-trip") {
  const fs::path dir = fresh_dir("emit-files");
  const auto pairs = four_pairs(dir);
  const auto r = build_records(pairs, EmitMode::kBoth, false);
  const auto files = write_records(r, dir / "out", EmitMode::kBoth);
  CHECK(files.text.filename() == "text_dpo.jsonl");
  CHECK(files.image.filename() == "image_dpo.jsonl");
  const auto text_rows = read_jsonl(files.text);
  const auto image_rows = read_jsonl(files.image);
  REQUIRE(text_rows.size() == 4);
  REQUIRE(image_rows.size() == 4);
  const auto t = text_record_from_json(text_rows[1]);
  CHECK(t.chosen == r.text[1].chosen);
  CHECK(t.image == r.text[1].image);
  const auto im = image_record_from_json(image_rows[3]);
  CHECK(im.rejected_image == r.image[3].rejected_image);
  CHECK(parse_emit_mode("both") == EmitMode::kBoth);
  CHECK_THROWS_AS(parse_emit_mode("audio"), Error);
}
