#include "wmbench/attacks.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "wmbench/random.hpp"

namespace wmbench::attacks {

namespace {

const char* kind_name(AttackKind k) {
  switch (k) {
    case AttackKind::Substitution:
      return "substitution";
    case AttackKind::Insertion:
      return "insertion";
    case AttackKind::Deletion:
      return "deletion";
    case AttackKind::Mixed:
      return "mixed";
  }
  return "unknown";
}

Token substitute_token(Token current, const Vocab& vocab, Rng& rng) {
  // Uniform over V \ {current}.
  const auto r = static_cast<Token>(rng.below(vocab.size - 1));
  return r >= current ? r + 1 : r;
}

/// b distinct positions in [0, n), order randomized, deterministic in rng.
std::vector<std::uint32_t> sample_positions(std::uint32_t n, std::uint32_t b, Rng& rng) {
  std::vector<std::uint32_t> idx(n);
  for (std::uint32_t i = 0; i < n; ++i) idx[i] = i;
  for (std::uint32_t i = 0; i < b; ++i) {
    const auto j = static_cast<std::uint32_t>(i + rng.below(n - i));
    std::swap(idx[i], idx[j]);
  }
  idx.resize(b);
  return idx;
}

struct SeqHash {
  std::size_t operator()(const TokenSeq& s) const {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (Token t : s) {
      h ^= t + 1;  // distinguish [0] from []
      h *= 0x100000001b3ULL;
    }
    return static_cast<std::size_t>(h);
  }
};

void apply_substitutions(TokenSeq& seq, std::uint32_t b, const Vocab& vocab, Rng& rng,
                         std::vector<Edit>& log) {
  const auto positions = sample_positions(static_cast<std::uint32_t>(seq.size()), b, rng);
  for (std::uint32_t pos : positions) {
    const Token old = seq[pos];
    const Token repl = substitute_token(old, vocab, rng);
    seq[pos] = repl;
    log.push_back({AttackKind::Substitution, pos, old, repl});
  }
}

}  // namespace

AttackSpec AttackSpec::count(AttackKind kind, std::uint32_t b, std::uint64_t seed) {
  AttackSpec s;
  s.kind = kind;
  s.edits = b;
  s.seed = seed;
  return s;
}

AttackSpec AttackSpec::ratio(AttackKind kind, double rho, std::uint64_t seed) {
  if (!(rho >= 0.0 && rho <= 1.0)) throw InputDomainError("AttackSpec: fraction in [0,1]");
  AttackSpec s;
  s.kind = kind;
  s.fraction = rho;
  s.seed = seed;
  return s;
}

std::uint32_t AttackSpec::resolve_budget(std::uint32_t token_count) const {
  if (edits.has_value() == fraction.has_value()) {
    throw InputDomainError("AttackSpec: exactly one of edits/fraction must be set");
  }
  if (edits) return *edits;
  return static_cast<std::uint32_t>(
      std::llround(*fraction * static_cast<double>(token_count)));
}

std::string AttackSpec::name() const {
  std::string n = kind_name(kind);
  if (fraction) {
    n += "_" + std::to_string(static_cast<int>(std::llround(*fraction * 100))) + "pct";
  } else if (edits) {
    n += "_b" + std::to_string(*edits);
  }
  return n;
}

AttackedText apply_attack(const TokenSeq& tokens, const AttackSpec& spec,
                          const Vocab& vocab) {
  const auto T = static_cast<std::uint32_t>(tokens.size());
  const std::uint32_t b = spec.resolve_budget(T);

  switch (spec.kind) {
    case AttackKind::Substitution:
      if (b > T) throw InputDomainError("apply_attack: substitution budget exceeds length");
      break;
    case AttackKind::Deletion:
      if (b >= T) {
        throw InputDomainError("apply_attack: deletion budget would empty the sequence");
      }
      break;
    default:
      break;
  }

  AttackedText out;
  out.tokens = tokens;
  Rng rng(spec.seed);

  switch (spec.kind) {
    case AttackKind::Substitution:
      apply_substitutions(out.tokens, b, vocab, rng, out.edit_log);
      break;
    case AttackKind::Deletion: {
      auto positions = sample_positions(T, b, rng);
      // Delete high to low so every logged position is valid at apply time.
      std::sort(positions.rbegin(), positions.rend());
      for (std::uint32_t pos : positions) {
        out.edit_log.push_back({AttackKind::Deletion, pos, out.tokens[pos], std::nullopt});
        out.tokens.erase(out.tokens.begin() + pos);
      }
      break;
    }
    case AttackKind::Insertion:
      for (std::uint32_t e = 0; e < b; ++e) {
        const auto pos =
            static_cast<std::uint32_t>(rng.below(out.tokens.size() + 1));
        const auto tok = static_cast<Token>(rng.below(vocab.size));
        out.tokens.insert(out.tokens.begin() + pos, tok);
        out.edit_log.push_back({AttackKind::Insertion, pos, std::nullopt, tok});
      }
      break;
    case AttackKind::Mixed:
      for (std::uint32_t e = 0; e < b; ++e) {
        std::uint64_t pick = rng.below(3);
        if (pick == 2 && out.tokens.size() <= 1) pick = rng.below(2);  // never empty
        if (pick == 0 && out.tokens.empty()) pick = 1;
        switch (pick) {
          case 0: {
            const auto pos = static_cast<std::uint32_t>(rng.below(out.tokens.size()));
            const Token old = out.tokens[pos];
            const Token repl = substitute_token(old, vocab, rng);
            out.tokens[pos] = repl;
            out.edit_log.push_back({AttackKind::Substitution, pos, old, repl});
            break;
          }
          case 1: {
            const auto pos =
                static_cast<std::uint32_t>(rng.below(out.tokens.size() + 1));
            const auto tok = static_cast<Token>(rng.below(vocab.size));
            out.tokens.insert(out.tokens.begin() + pos, tok);
            out.edit_log.push_back({AttackKind::Insertion, pos, std::nullopt, tok});
            break;
          }
          default: {
            const auto pos = static_cast<std::uint32_t>(rng.below(out.tokens.size()));
            out.edit_log.push_back(
                {AttackKind::Deletion, pos, out.tokens[pos], std::nullopt});
            out.tokens.erase(out.tokens.begin() + pos);
            break;
          }
        }
      }
      break;
  }
  return out;
}

TokenSeq replay_edits(const TokenSeq& original, const std::vector<Edit>& log) {
  TokenSeq seq = original;
  for (const Edit& e : log) {
    switch (e.kind) {
      case AttackKind::Substitution:
        if (e.position >= seq.size() || !e.old_token || seq[e.position] != *e.old_token) {
          throw ContractError("replay_edits: substitution log mismatch");
        }
        seq[e.position] = *e.new_token;
        break;
      case AttackKind::Insertion:
        if (e.position > seq.size() || !e.new_token) {
          throw ContractError("replay_edits: insertion log mismatch");
        }
        seq.insert(seq.begin() + e.position, *e.new_token);
        break;
      case AttackKind::Deletion:
        if (e.position >= seq.size() || !e.old_token || seq[e.position] != *e.old_token) {
          throw ContractError("replay_edits: deletion log mismatch");
        }
        seq.erase(seq.begin() + e.position);
        break;
      case AttackKind::Mixed:
        throw ContractError("replay_edits: mixed is not a concrete edit kind");
    }
  }
  return seq;
}

void enumerate_edits(const TokenSeq& tokens, std::uint32_t b, const Vocab& vocab,
                     const std::function<void(const TokenSeq&)>& visit,
                     std::uint64_t max_candidates) {
  // Coarse feasibility bound before any work: the one-edit neighborhood of a
  // length-n sequence has at most n(V-1) + (n+1)V + n members.
  {
    const double n = static_cast<double>(tokens.size()) + static_cast<double>(b);
    const double v = static_cast<double>(vocab.size);
    const double per_step = n * (v - 1.0) + (n + 1.0) * v + n;
    double bound = 1.0;
    for (std::uint32_t i = 0; i < b; ++i) {
      bound *= (per_step + 1.0);
      if (bound > static_cast<double>(max_candidates)) {
        throw BudgetError("enumerate_edits: candidate bound exceeds budget");
      }
    }
  }

  std::unordered_set<TokenSeq, SeqHash> visited;
  std::vector<TokenSeq> frontier{tokens};
  visited.insert(tokens);
  visit(tokens);

  for (std::uint32_t level = 0; level < b; ++level) {
    std::vector<TokenSeq> next;
    for (const TokenSeq& seq : frontier) {
      const auto try_emit = [&](TokenSeq&& cand) {
        if (visited.size() >= max_candidates) {
          throw BudgetError("enumerate_edits: candidate set exceeds budget");
        }
        auto [it, inserted] = visited.insert(std::move(cand));
        if (inserted) {
          visit(*it);
          next.push_back(*it);
        }
      };
      // Substitutions
      for (std::size_t i = 0; i < seq.size(); ++i) {
        for (Token t = 0; t < vocab.size; ++t) {
          if (t == seq[i]) continue;
          TokenSeq cand = seq;
          cand[i] = t;
          try_emit(std::move(cand));
        }
      }
      // Insertions
      for (std::size_t i = 0; i <= seq.size(); ++i) {
        for (Token t = 0; t < vocab.size; ++t) {
          TokenSeq cand;
          cand.reserve(seq.size() + 1);
          cand.insert(cand.end(), seq.begin(), seq.begin() + i);
          cand.push_back(t);
          cand.insert(cand.end(), seq.begin() + i, seq.end());
          try_emit(std::move(cand));
        }
      }
      // Deletions
      for (std::size_t i = 0; i < seq.size(); ++i) {
        TokenSeq cand;
        cand.reserve(seq.size() - 1);
        cand.insert(cand.end(), seq.begin(), seq.begin() + i);
        cand.insert(cand.end(), seq.begin() + i + 1, seq.end());
        try_emit(std::move(cand));
      }
    }
    frontier = std::move(next);
  }
}

std::vector<TokenSeq> enumerate_edits_vec(const TokenSeq& tokens, std::uint32_t b,
                                          const Vocab& vocab,
                                          std::uint64_t max_candidates) {
  std::vector<TokenSeq> out;
  enumerate_edits(
      tokens, b, vocab, [&out](const TokenSeq& s) { out.push_back(s); }, max_candidates);
  return out;
}

}  // namespace wmbench::attacks
