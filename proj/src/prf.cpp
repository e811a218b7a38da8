#include "wmbench/prf.hpp"

#include <sodium.h>

#include <cstring>
#include <mutex>
#include <stdexcept>

namespace wmbench {

namespace {

void ensure_sodium_init() {
  static std::once_flag flag;
  std::call_once(flag, [] {
    if (sodium_init() < 0) {
      throw std::runtime_error("libsodium initialization failed");
    }
  });
}

}  // namespace

std::array<unsigned char, 32> prf_derive_key(const std::string& domain_tag,
                                             const Bytes& payload) {
  ensure_sodium_init();
  Bytes msg(domain_tag.begin(), domain_tag.end());
  msg.insert(msg.end(), payload.begin(), payload.end());
  std::array<unsigned char, 32> out{};
  crypto_generichash(out.data(), out.size(), msg.data(), msg.size(), nullptr, 0);
  return out;
}

std::string blake2b_hex(const std::string& data) {
  ensure_sodium_init();
  std::array<unsigned char, 32> digest{};
  crypto_generichash(digest.data(), digest.size(),
                     reinterpret_cast<const unsigned char*>(data.data()), data.size(),
                     nullptr, 0);
  static const char* hex = "0123456789abcdef";
  std::string out;
  out.reserve(64);
  for (unsigned char b : digest) {
    out.push_back(hex[b >> 4]);
    out.push_back(hex[b & 0xF]);
  }
  return out;
}

void put_u32_le(Bytes& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<unsigned char>((v >> (8 * i)) & 0xFF));
}

void put_u64_le(Bytes& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<unsigned char>((v >> (8 * i)) & 0xFF));
}

PrfStream::PrfStream(const std::array<unsigned char, 32>& key, Bytes context)
    : key_(key), context_(std::move(context)) {
  ensure_sodium_init();
}

void PrfStream::refill() {
  Bytes msg = context_;
  put_u64_le(msg, counter_++);
  unsigned char block[64];
  crypto_generichash(block, sizeof(block), msg.data(), msg.size(), key_.data(),
                     key_.size());
  for (std::size_t w = 0; w < 8; ++w) {
    std::uint64_t v = 0;
    for (int i = 7; i >= 0; --i) v = (v << 8) | block[w * 8 + static_cast<std::size_t>(i)];
    words_[w] = v;
  }
  used_ = 0;
}

std::uint64_t PrfStream::next_u64() {
  if (used_ >= words_.size()) refill();
  return words_[used_++];
}

std::uint64_t PrfStream::next_below(std::uint64_t n) {
  if (n <= 1) return 0;
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
  std::uint64_t x;
  do {
    x = next_u64();
  } while (x >= limit);
  return x % n;
}

}  // namespace wmbench
