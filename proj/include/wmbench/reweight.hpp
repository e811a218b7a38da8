#pragma once

/**
 * Watermark generators: transforms of a next-token distribution driven by
 * a KeyDraw. Three unbiased families (inverse-sampling, Gumbel-style
 * argmax, permute-reweight) plus biased green-list baselines.
 *
 * Keyed stream consumption order per family (shared with detection so the
 * two sides can never disagree):
 *   KGW / Unigram / STA1   permutation(V)                  -> green set
 *   DiPmark / GammaReweight permutation(V)
 *   MCmark                 permutation(V), u_segment
 *   ITS                    permutation(V), u
 *   EXP                    V uniforms u_0..u_{V-1}
 *   SynthID(m)             m*V uniforms, g_l(x) = [u[l*V+x] >= 0.5]
 * Sampling noise beyond the key (closed-form families, SynthID candidate
 * draws) comes from the explicit Rng overload; the Rng-free overload takes
 * everything from the KeyDraw stream and is fully key-deterministic.
 * Tie-breaking everywhere: lowest index wins.
 */

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "wmbench/keys.hpp"
#include "wmbench/random.hpp"
#include "wmbench/types.hpp"

namespace wmbench::reweight {

enum class Family {
  KGW,
  Unigram,
  DiPmark,
  GammaReweight,  // DiPmark with alpha = 0.5
  ITS,
  EXP,
  SynthID,
  MCmark,
  STA1,
};

struct WatermarkStrategy {
  Family family = Family::DiPmark;
  double delta = 2.0;        // KGW / Unigram
  double gamma = 0.5;        // KGW / Unigram / STA1 green fraction
  double alpha = 0.5;        // DiPmark
  std::uint32_t layers = 4;  // SynthID tournament depth m
  std::uint32_t segments = 4;  // MCmark list length l

  static WatermarkStrategy kgw(double delta, double gamma = 0.5);
  static WatermarkStrategy unigram(double delta, double gamma = 0.5);
  static WatermarkStrategy dipmark(double alpha);
  static WatermarkStrategy gamma_reweight();
  static WatermarkStrategy its();
  static WatermarkStrategy exp();
  static WatermarkStrategy synthid(std::uint32_t layers);
  static WatermarkStrategy mcmark(std::uint32_t segments);
  static WatermarkStrategy sta1(double gamma = 0.5);

  /// Unigram forces Global keys; every other family defaults to NGram(2).
  keys::ContextScheme default_scheme() const;

  bool has_closed_form() const;  // watermarked_distribution defined
  bool is_unbiased() const { return family != Family::KGW && family != Family::Unigram; }

  std::string name() const;
};

struct SampleOutcome {
  Token token = 0;
  /// Strategy-specific detection witness (the uniform u for ITS/EXP).
  std::optional<double> aux;
};

// ---------------------------------------------------------------------------
// Keyed structures shared between generation and detection
// ---------------------------------------------------------------------------

/// Green set of a permutation: its first ceil(gamma * V) elements.
std::vector<bool> green_mask_from_permutation(const std::vector<Token>& perm,
                                              double gamma);

/// DiPmark-family detection green set: last ceil(V/2) permutation slots.
std::vector<bool> dipmark_green_mask(const std::vector<Token>& perm);

std::uint32_t green_set_size(std::uint32_t v, double gamma);

/// SynthID keyed bits: g[l*V + x] for layer l, token x.
std::vector<std::uint8_t> synthid_bits(keys::KeyDraw& draw, std::uint32_t layers,
                                       std::uint32_t v);

/// MCmark keyed parts: permutation and the selected segment.
struct McmarkKey {
  std::vector<Token> perm;
  std::uint32_t segments = 2;
  std::uint32_t segment = 0;
};
McmarkKey mcmark_key(keys::KeyDraw& draw, std::uint32_t segments, std::uint32_t v);

/**
 * MCmark membership: the token's permutation rank, mapped to one of l
 * equal rank blocks. Model-free at detection time; for key-independent
 * text the hit rate is exactly 1/l whenever l divides V. Sampling stays
 * inside the selected cdf-mass segment, so on clean watermarked text the
 * rank block matches the selected segment except where a token's cdf
 * interval straddles a block boundary (never for mass-aligned fixtures
 * such as uniform distributions).
 */
bool mcmark_member(const McmarkKey& key, Token token);

// ---------------------------------------------------------------------------
// Operations
// ---------------------------------------------------------------------------

/**
 * Conditional watermarked distribution P_W(. | key) for families with a
 * closed form (KGW, Unigram, DiPmark, GammaReweight, MCmark, STA1).
 * Throws ContractError for sampling-defined families (ITS, EXP, SynthID).
 */
TokenDistribution watermarked_distribution(const WatermarkStrategy& strategy,
                                           const TokenDistribution& dist,
                                           keys::KeyDraw& draw);

/**
 * Sample one token from P_W(. | key). The Rng-free overload draws any
 * sampling noise from the key stream itself (pure function of strategy,
 * dist, draw); the Rng overload uses `rng` for sampling noise so repeated
 * fixed-key generations are independent draws from P_W.
 */
SampleOutcome watermarked_sample(const WatermarkStrategy& strategy,
                                 const TokenDistribution& dist, keys::KeyDraw& draw);
SampleOutcome watermarked_sample(const WatermarkStrategy& strategy,
                                 const TokenDistribution& dist, keys::KeyDraw& draw,
                                 Rng& rng);

struct KeyBudget {
  bool exhaustive = true;          // enumerate the key space exactly
  std::uint64_t mc_samples = 0;    // Monte Carlo budget when not exhaustive
  std::uint64_t mc_seed = 1;
};

/**
 * Key-averaged next-token law E_k[P_W(. | k)]; the workhorse of
 * unbiasedness testing. Exhaustive enumeration requires V <= 6 and is
 * exact: permutations and segment choices are enumerated and the ITS/EXP
 * uniform is integrated out analytically (interval measure) or by
 * Gauss-Legendre quadrature. SynthID has no closed form and requires a
 * Monte Carlo budget.
 */
TokenDistribution expected_watermarked_distribution(const WatermarkStrategy& strategy,
                                                    const TokenDistribution& dist,
                                                    const KeyBudget& budget = {});

}  // namespace wmbench::reweight
