#pragma once

// Prompt embedding: hashed bag-of-words over a learned table.

#include <cctype>
#include <string>
#include <vector>

#include "pmotion/nn.hpp"

namespace pmotion {

// FNV-1a over each lowercased alphanumeric run, reduced mod vocab.
inline std::vector<int> hash_tokens(const std::string& text, int vocab) {
  std::vector<int> ids;
  uint64_t h = 1469598103934665603ull;
  bool open = false;
  auto flush = [&] {
    if (open) ids.push_back(int(h % uint64_t(vocab)));
    h = 1469598103934665603ull;
    open = false;
  };
  for (unsigned char c : text) {
    if (std::isalnum(c)) {
      h = (h ^ uint64_t(std::tolower(c))) * 1099511628211ull;
      open = true;
    } else {
      flush();
    }
  }
  flush();
  return ids;
}

// Mean of hashed token rows, projected to the model width; a learned
// null row stands in for the empty prompt (the unconditional branch).
template <class S>
struct TextEncoder {
  int vocab = 0;
  nn::ParamStore<S>* store = nullptr;
  ad::Tensor<S> table, null_row;
  nn::Linear<S> proj;

  TextEncoder() = default;
  TextEncoder(nn::ParamStore<S>& ps, const std::string& prefix, int vocab_,
              Eigen::Index dim, Rng& rng)
      : vocab(vocab_) {
    table = ps.add(prefix + ".table",
                   nn::normal_init<S>(vocab_, dim, 0.02, rng));
    null_row = ps.add(prefix + ".null", Mat<S>::Zero(1, dim));
    proj = nn::Linear<S>(ps, prefix + ".proj", dim, dim, rng);
  }

  ad::Tensor<S> forward(const std::string& prompt) const {
    std::vector<int> ids = hash_tokens(prompt, vocab);
    ad::Tensor<S> e =
        ids.empty() ? null_row : ad::gather_rows_mean(table, ids);
    return proj.forward(e);
  }
};

}  // namespace pmotion
