#pragma once

#include <cstdint>
#include <cstring>
#include <string>

namespace pmotion {

// FNV-1a 64-bit. Used for config digests, checkpoint integrity and
// determinism checks; not a cryptographic hash.
class Fnv1a {
 public:
  void update(const void* data, size_t n) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (size_t i = 0; i < n; ++i) {
      h_ ^= p[i];
      h_ *= 0x100000001b3ull;
    }
  }
  void update(const std::string& s) { update(s.data(), s.size()); }
  template <class T>
  void update_pod(const T& v) {
    update(&v, sizeof(T));
  }
  uint64_t value() const { return h_; }
  std::string hex() const {
    static const char* d = "0123456789abcdef";
    std::string out(16, '0');
    uint64_t v = h_;
    for (int i = 15; i >= 0; --i) {
      out[i] = d[v & 0xf];
      v >>= 4;
    }
    return out;
  }

 private:
  uint64_t h_ = 0xcbf29ce484222325ull;
};

inline uint64_t fnv1a64(const void* data, size_t n) {
  Fnv1a f;
  f.update(data, n);
  return f.value();
}

inline std::string digest_hex(const void* data, size_t n) {
  Fnv1a f;
  f.update(data, n);
  return f.hex();
}

inline std::string digest_hex(const std::string& s) {
  return digest_hex(s.data(), s.size());
}

}  // namespace pmotion
