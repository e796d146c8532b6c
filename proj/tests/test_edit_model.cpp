#include "ocralign/edit_model.hpp"

#include <doctest.h>

#include "ocralign/rng.hpp"
#include "support.hpp"

using namespace ocralign;
using testsupport::TempDir;

namespace {

std::u32string random_u32(SplitMix64& rng, std::size_t max_len, std::size_t alphabet) {
  const auto len = rng.next_u64() % (max_len + 1);
  std::u32string s;
  for (std::uint64_t i = 0; i < len; ++i) {
    s.push_back(static_cast<char32_t>(U'a' + rng.next_u64() % alphabet));
  }
  return s;
}

}  // namespace

TEST_CASE("edit alignment of equal strings is all matches") {
  const auto script = char_edit_alignment("abc", "abc");
  const auto c = script.counts();
  CHECK(c.matches == 3);
  CHECK(c.errors() == 0);
}

TEST_CASE("edit alignment picks the expected transcripts") {
  SUBCASE("trailing substitution") {
    const auto script = char_edit_alignment("abc", "abd");
    REQUIRE(script.ops.size() == 3);
    CHECK(script.ops[0] == EditOp{EditOpKind::kMatch, U'a', U'a'});
    CHECK(script.ops[1] == EditOp{EditOpKind::kMatch, U'b', U'b'});
    CHECK(script.ops[2] == EditOp{EditOpKind::kSubstitute, U'c', U'd'});
  }
  SUBCASE("insertion carries the previous clean character") {
    const auto script = char_edit_alignment("ab", "axb");
    REQUIRE(script.ops.size() == 3);
    CHECK(script.ops[0] == EditOp{EditOpKind::kMatch, U'a', U'a'});
    CHECK(script.ops[1] == EditOp{EditOpKind::kInsert, U'a', U'x'});
    CHECK(script.ops[2] == EditOp{EditOpKind::kMatch, U'b', U'b'});
  }
  SUBCASE("substitution beats delete+insert on ties") {
    const auto script = char_edit_alignment("ab", "ba");
    REQUIRE(script.ops.size() == 2);
    CHECK(script.ops[0] == EditOp{EditOpKind::kSubstitute, U'a', U'b'});
    CHECK(script.ops[1] == EditOp{EditOpKind::kSubstitute, U'b', U'a'});
  }
  SUBCASE("begin-of-line insertion context") {
    const auto script = char_edit_alignment("", "xy");
    REQUIRE(script.ops.size() == 2);
    CHECK(script.ops[0] == EditOp{EditOpKind::kInsert, kBeginContext, U'x'});
    CHECK(script.ops[1] == EditOp{EditOpKind::kInsert, kBeginContext, U'y'});
  }
  SUBCASE("full deletion") {
    const auto script = char_edit_alignment("abc", "");
    CHECK(script.counts().deletions == 3);
  }
}

TEST_CASE("edit scripts replay to the noisy string and match an independent DP") {
  SplitMix64 rng(4242);
  for (int trial = 0; trial < 500; ++trial) {
    const auto clean = random_u32(rng, 30, 8);
    const auto noisy = random_u32(rng, 30, 8);
    const auto script = char_edit_alignment(clean, noisy);
    CHECK(script.replay(clean) == noisy);
    CHECK(script.counts().errors() == testsupport::levenshtein_distance(clean, noisy));
  }
}

TEST_CASE("extract_noise_model counts substitutions against clean denominators") {
  const auto model = extract_noise_model({{"ab", "ab"}, {"ab", "cb"}});
  CHECK(model.sub_prob(U'a', U'c') == doctest::Approx(0.5));
  CHECK(model.no_error(U'a') == doctest::Approx(0.5));
  CHECK(model.sub_error_mass(U'b') == 0.0);
  CHECK(model.char_counts.at(U'a') == 2);
  CHECK(model.lines == 2);
}

TEST_CASE("extract_noise_model insertion probabilities") {
  const auto model = extract_noise_model({{"ab", "axb"}});
  CHECK(model.ins_prob(U'a', U'x') == doctest::Approx(1.0));
  CHECK(model.ins_total(U'a') == doctest::Approx(1.0));
  CHECK(model.ins_total(U'b') == 0.0);
}

TEST_CASE("deletion is substitution to epsilon") {
  const auto model = extract_noise_model({{"a", ""}});
  CHECK(model.sub_prob(U'a', kEpsilon) == doctest::Approx(1.0));
  CHECK(model.no_error(U'a') == doctest::Approx(0.0));
}

TEST_CASE("empty clean lines contribute only begin contexts") {
  const auto model = extract_noise_model({{"", "xy"}});
  CHECK(model.lines == 1);
  CHECK(model.char_counts.empty());
  CHECK(model.ins_prob(kBeginContext, U'x') == doctest::Approx(1.0));
  CHECK(model.ins_prob(kBeginContext, U'y') == doctest::Approx(1.0));
  CHECK(model.ins_total(kBeginContext) == doctest::Approx(2.0));
}

TEST_CASE("extract_noise_model rejects an empty pair list") {
  CHECK_THROWS_AS(extract_noise_model({}), DataError);
}

TEST_CASE("extracted models always normalize") {
  SplitMix64 rng(777);
  std::vector<std::pair<std::string, std::string>> pairs;
  for (int i = 0; i < 200; ++i) {
    const auto clean = random_u32(rng, 20, 6);
    const auto noisy = random_u32(rng, 20, 6);
    pairs.emplace_back(encode_utf8(clean), encode_utf8(noisy));
  }
  const auto model = extract_noise_model(pairs);
  CHECK_NOTHROW(model.validate());
  for (const auto& [c, outcomes] : model.sub) {
    CHECK(model.sub_error_mass(c) <= 1.0 + 1e-12);
    CHECK(model.no_error(c) >= -1e-12);
  }
}

TEST_CASE("compute_cer") {
  SUBCASE("one substitution in three characters") {
    const auto r = compute_cer({{"abc", "abd"}});
    CHECK(r.total_cer == doctest::Approx(100.0 / 3.0));
    CHECK(r.sub_share == doctest::Approx(100.0));
    CHECK(r.ins_share == 0.0);
    CHECK(r.del_share == 0.0);
  }
  SUBCASE("identical pairs") {
    const auto r = compute_cer({{"same text", "same text"}});
    CHECK(r.total_cer == 0.0);
  }
  SUBCASE("shares cover all error classes") {
    // one sub (a->z), one del (b), one ins (x after c)
    const auto r = compute_cer({{"abc", "zcx"}});
    CHECK(r.edits.errors() == 3);
    CHECK(r.sub_share + r.ins_share + r.del_share == doctest::Approx(100.0).epsilon(0.001));
  }
  SUBCASE("zero clean characters is an error") {
    CHECK_THROWS_AS(compute_cer({{"", "x"}}), DataError);
    CHECK_THROWS_AS(compute_cer({}), DataError);
  }
}

TEST_CASE("noise model files round-trip losslessly and deterministically") {
  SplitMix64 rng(31337);
  std::vector<std::pair<std::string, std::string>> pairs;
  for (int i = 0; i < 150; ++i) {
    const auto clean = random_u32(rng, 25, 7);
    auto noisy = clean;
    if (!noisy.empty() && rng.next_double() < 0.7) {
      noisy[rng.next_u64() % noisy.size()] = static_cast<char32_t>(U'a' + rng.next_u64() % 9);
    }
    pairs.emplace_back(encode_utf8(clean), encode_utf8(noisy));
  }
  const auto model = extract_noise_model(pairs);

  TempDir dir("model");
  save_model(model, dir.file("m.json"));
  const auto loaded = load_model(dir.file("m.json"));
  CHECK(loaded.lines == model.lines);
  CHECK(loaded.char_counts == model.char_counts);
  CHECK(loaded.sub == model.sub);
  for (const auto& [k, dist] : model.ins) {
    CHECK(loaded.ins.at(k).by_char == dist.by_char);
    CHECK(loaded.ins.at(k).total == doctest::Approx(dist.total).epsilon(1e-12));
  }

  save_model(loaded, dir.file("m2.json"));
  CHECK(testsupport::read_file(dir.file("m.json")) == testsupport::read_file(dir.file("m2.json")));
}

TEST_CASE("a model with no observed errors round-trips as all-no-error") {
  const auto model = extract_noise_model({{"abc", "abc"}});
  CHECK(model.sub.empty());
  CHECK(model.ins.empty());
  TempDir dir("model");
  save_model(model, dir.file("clean.json"));
  const auto loaded = load_model(dir.file("clean.json"));
  CHECK(loaded.sub.empty());
  CHECK(loaded.no_error(U'a') == 1.0);
  CHECK(loaded.char_counts.at(U'a') == 1);
}

TEST_CASE("load_model rejects tampered files with a field path") {
  TempDir dir("model");
  SUBCASE("substitution mass above one") {
    testsupport::write_file(dir.file("bad.json"),
                            R"({"format":"ocralign-noise-model","version":1,"lines":1,
                                "char_counts":{"a":2},
                                "sub":{"a":{"b":0.7,"":0.5}},"ins":{}})");
    CHECK_THROWS_WITH_AS(load_model(dir.file("bad.json")), doctest::Contains("sub.a"), DataError);
  }
  SUBCASE("negative probability") {
    testsupport::write_file(dir.file("bad.json"),
                            R"({"format":"ocralign-noise-model","version":1,"lines":1,
                                "char_counts":{"a":2},
                                "sub":{"a":{"b":-0.1}},"ins":{}})");
    CHECK_THROWS_AS(load_model(dir.file("bad.json")), DataError);
  }
  SUBCASE("wrong format marker") {
    testsupport::write_file(dir.file("bad.json"), R"({"format":"something-else","version":1})");
    CHECK_THROWS_AS(load_model(dir.file("bad.json")), DataError);
  }
  SUBCASE("multi-character key") {
    testsupport::write_file(dir.file("bad.json"),
                            R"({"format":"ocralign-noise-model","version":1,"lines":1,
                                "char_counts":{"ab":2},"sub":{},"ins":{}})");
    CHECK_THROWS_AS(load_model(dir.file("bad.json")), DataError);
  }
  SUBCASE("garbage bytes") {
    testsupport::write_file(dir.file("bad.json"), "not json at all {{{");
    CHECK_THROWS_AS(load_model(dir.file("bad.json")), DataError);
    CHECK_THROWS_AS(load_model(dir.file("missing.json")), DataError);
  }
}

TEST_CASE("load_edit_pairs zips line-aligned files with located errors") {
  TempDir dir("pairs");
  testsupport::write_file(dir.file("c.txt"), "abc\ndef\n");
  testsupport::write_file(dir.file("n.txt"), "abd\ndef\n");
  const auto pairs = load_edit_pairs(dir.file("c.txt"), dir.file("n.txt"));
  REQUIRE(pairs.size() == 2);
  CHECK(pairs[0] == std::pair<std::string, std::string>{"abc", "abd"});

  testsupport::write_file(dir.file("short.txt"), "abc\n");
  CHECK_THROWS_WITH_AS(load_edit_pairs(dir.file("c.txt"), dir.file("short.txt")),
                       doctest::Contains("line count mismatch 2 vs 1"), DataError);

  testsupport::write_file(dir.file("bad.txt"), "ok\n\xc3(\n");
  CHECK_THROWS_WITH_AS(load_edit_pairs(dir.file("c.txt"), dir.file("bad.txt")),
                       doctest::Contains("line 2"), DataError);
}

TEST_CASE("unicode text aligns at the codepoint level") {
  // "naïve" OCR'd with the diaeresis lost: one substitution, not a byte mess
  const auto script = char_edit_alignment("naïve", "naive");
  const auto c = script.counts();
  CHECK(c.matches == 4);
  CHECK(c.substitutions == 1);
  const auto model = extract_noise_model({{"naïve", "naive"}});
  CHECK(model.sub_prob(U'ï', U'i') == doctest::Approx(1.0));
}
