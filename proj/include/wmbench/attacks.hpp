#pragma once

/**
 * Edit-bounded token-level adversaries (substitute / insert / delete) and
 * exhaustive enumeration of the edit ball for certificate verification.
 */

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "wmbench/types.hpp"

namespace wmbench::attacks {

enum class AttackKind { Substitution, Insertion, Deletion, Mixed };

struct AttackSpec {
  AttackKind kind = AttackKind::Substitution;
  /// Exactly one of `edits` / `fraction` is set; fraction resolves to
  /// round(fraction * T) at apply time.
  std::optional<std::uint32_t> edits;
  std::optional<double> fraction;
  std::uint64_t seed = 0;

  static AttackSpec count(AttackKind kind, std::uint32_t b, std::uint64_t seed);
  static AttackSpec ratio(AttackKind kind, double rho, std::uint64_t seed);

  std::uint32_t resolve_budget(std::uint32_t token_count) const;
  std::string name() const;
};

struct Edit {
  AttackKind kind = AttackKind::Substitution;  // never Mixed in a log entry
  std::uint32_t position = 0;   // position in the sequence state at apply time
  std::optional<Token> old_token;
  std::optional<Token> new_token;
};

struct AttackedText {
  TokenSeq tokens;
  std::vector<Edit> edit_log;
};

/// Applies exactly b edits; deterministic given spec.seed.
AttackedText apply_attack(const TokenSeq& tokens, const AttackSpec& spec,
                          const Vocab& vocab);

/// Replays an edit log against the original sequence (invariant check).
TokenSeq replay_edits(const TokenSeq& original, const std::vector<Edit>& log);

/**
 * Visits every distinct sequence within edit distance <= b of `tokens`
 * (substitution/insertion/deletion), each exactly once, including the
 * original. Throws BudgetError if the candidate set would exceed
 * `max_candidates`.
 */
void enumerate_edits(const TokenSeq& tokens, std::uint32_t b, const Vocab& vocab,
                     const std::function<void(const TokenSeq&)>& visit,
                     std::uint64_t max_candidates = 10'000'000);

/// Convenience: materialized enumeration (small instances only).
std::vector<TokenSeq> enumerate_edits_vec(const TokenSeq& tokens, std::uint32_t b,
                                          const Vocab& vocab,
                                          std::uint64_t max_candidates = 10'000'000);

}  // namespace wmbench::attacks
