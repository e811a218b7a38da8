#include <vector>

#include "doctest.h"
#include "wmbench/keys.hpp"
#include "wmbench/stats.hpp"

using namespace wmbench;
using keys::ContextScheme;
using keys::EditKind;

namespace {

std::vector<double> first_uniforms(keys::PrfKeyDraw draw, int n) {
  std::vector<double> out;
  for (int i = 0; i < n; ++i) out.push_back(draw.uniform());
  return out;
}

}  // namespace

TEST_CASE("SecretKey construction") {
  CHECK_THROWS_AS(keys::SecretKey::from_bytes(Bytes(8, 0x11)), InputDomainError);
  const auto a = keys::SecretKey::from_seed(1);
  const auto b = keys::SecretKey::from_seed(1);
  const auto c = keys::SecretKey::from_seed(2);
  CHECK(a.bytes == b.bytes);
  CHECK(a.bytes != c.bytes);
  CHECK(a.bytes.size() == 32);
}

TEST_CASE("Global scheme ignores position and prefix") {
  const auto sk = keys::SecretKey::from_seed(5);
  const Vocab v(16);
  const auto s = ContextScheme::global();
  const TokenSeq p1 = {1, 2, 3};
  const TokenSeq p2 = {9};
  CHECK(first_uniforms(keys::derive(sk, s, p1, 3, v), 8) ==
        first_uniforms(keys::derive(sk, s, p2, 11, v), 8));
}

TEST_CASE("NGram context uses only the last n tokens") {
  const auto sk = keys::SecretKey::from_seed(5);
  const Vocab v(16);
  const auto s = ContextScheme::ngram(2);
  CHECK(first_uniforms(keys::derive(sk, s, TokenSeq{5, 7, 9}, 3, v), 8) ==
        first_uniforms(keys::derive(sk, s, TokenSeq{1, 7, 9}, 3, v), 8));
  CHECK(first_uniforms(keys::derive(sk, s, TokenSeq{5, 7, 9}, 3, v), 8) !=
        first_uniforms(keys::derive(sk, s, TokenSeq{5, 7, 8}, 3, v), 8));
}

TEST_CASE("NGram short prefixes pad with the sentinel") {
  const auto sk = keys::SecretKey::from_seed(5);
  const Vocab v(16);
  const auto s = ContextScheme::ngram(2);
  // [7] pads to [sentinel, 7]; it must differ from every in-vocab 2-gram.
  const auto padded = first_uniforms(keys::derive(sk, s, TokenSeq{7}, 1, v), 4);
  for (Token t = 0; t < v.size; ++t) {
    CHECK(padded != first_uniforms(keys::derive(sk, s, TokenSeq{t, 7}, 2, v), 4));
  }
  // Same short prefix twice: identical stream.
  CHECK(padded == first_uniforms(keys::derive(sk, s, TokenSeq{7}, 1, v), 4));
}

TEST_CASE("Position scheme distinguishes positions") {
  const auto sk = keys::SecretKey::from_seed(5);
  const Vocab v(16);
  const auto s = ContextScheme::position();
  const TokenSeq p = {1, 2, 3};
  CHECK(keys::derive(sk, s, p, 3, v).uniform() != keys::derive(sk, s, p, 4, v).uniform());
}

TEST_CASE("FixedList scheme wraps position mod L") {
  const auto sk = keys::SecretKey::from_seed(5);
  const Vocab v(16);
  const auto s = ContextScheme::fixed_list(4);
  const TokenSeq p = {};
  CHECK(keys::derive(sk, s, p, 1, v).uniform() == keys::derive(sk, s, p, 5, v).uniform());
  CHECK(keys::derive(sk, s, p, 1, v).uniform() != keys::derive(sk, s, p, 2, v).uniform());
}

TEST_CASE("Keyed permutations are valid and deterministic") {
  const auto sk = keys::SecretKey::from_seed(5);
  const Vocab v(16);
  auto d1 = keys::derive(sk, ContextScheme::ngram(2), TokenSeq{1, 2}, 2, v);
  auto d2 = keys::derive(sk, ContextScheme::ngram(2), TokenSeq{1, 2}, 2, v);
  const auto p1 = d1.permutation(16);
  const auto p2 = d2.permutation(16);
  CHECK(p1 == p2);
  std::vector<bool> seen(16, false);
  for (Token t : p1) {
    CHECK_FALSE(seen[t]);
    seen[t] = true;
  }
}

TEST_CASE("Stream uniformity across contexts (KS at 0.001)") {
  const auto sk = keys::SecretKey::from_seed(17);
  const Vocab v(16);
  const auto s = ContextScheme::position();
  const std::size_t n = 10'000;
  std::vector<double> firsts(n);
  for (std::size_t i = 0; i < n; ++i) {
    firsts[i] = keys::derive(sk, s, TokenSeq{}, static_cast<std::uint32_t>(i), v).uniform();
  }
  const double d = stats::ks_statistic_uniform(firsts);
  CHECK(d < stats::ks_critical_value(0.001, n));
}

TEST_CASE("Token effect region lengths") {
  const auto ngram2 = ContextScheme::ngram(2);
  const auto global = ContextScheme::global();
  const auto pos = ContextScheme::position();
  const auto list = ContextScheme::fixed_list(8);

  CHECK(keys::effect_region_length(ngram2, EditKind::Substitution, 0, 100) == 3);
  CHECK(keys::effect_region_length(global, EditKind::Deletion, 42, 100) == 1);
  CHECK(keys::effect_region_length(pos, EditKind::Insertion, 10, 50) == 40);
  CHECK(keys::effect_region_length(pos, EditKind::Substitution, 10, 50) == 1);
  CHECK(keys::effect_region_length(list, EditKind::Substitution, 10, 50) == 1);
  CHECK(keys::effect_region_length(list, EditKind::Deletion, 10, 50) == 40);
  // Tail truncation: min(n+1, T-i).
  CHECK(keys::effect_region_length(ngram2, EditKind::Deletion, 99, 100) == 1);
  CHECK(keys::effect_region_length(ngram2, EditKind::Insertion, 98, 100) == 2);

  CHECK_THROWS_AS(keys::effect_region_length(ngram2, EditKind::Substitution, 100, 100),
                  InputDomainError);
}

TEST_CASE("Effect region properties") {
  const auto ngram3 = ContextScheme::ngram(3);
  const std::uint32_t T = 64;
  for (std::uint32_t i = 0; i < T; ++i) {
    CHECK(keys::effect_region_length(ngram3, EditKind::Substitution, i, T) <= 4);
  }
  const auto pos = ContextScheme::position();
  std::uint32_t prev = T + 1;
  for (std::uint32_t i = 0; i < T; ++i) {
    const auto r = keys::effect_region_length(pos, EditKind::Insertion, i, T);
    CHECK(r <= prev);
    prev = r;
  }
  CHECK(keys::max_effect_region(ngram3, EditKind::Substitution, T) == 4);
  CHECK(keys::max_effect_region_any(ngram3, T) == 4);
  CHECK(keys::max_effect_region_any(pos, T) == T);
  CHECK(keys::max_effect_region_any(ContextScheme::global(), T) == 1);
}
