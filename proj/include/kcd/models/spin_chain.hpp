#pragma once

#include <string>
#include <utility>
#include <vector>

#include "kcd/core/pauli.hpp"

namespace kcd::chain {

// Pauli string with the given letters at 1-based sites; sites beyond n wrap
// around (periodic chains).
inline PauliString string_at(int n, std::initializer_list<std::pair<int, char>> letters) {
  std::string s(n, 'I');
  for (auto [site, c] : letters) s[((site - 1) % n + n) % n] = c;
  return PauliString::parse(s);
}

// a_n Z_{n+1} ... Z_{n+k-1} b_{n+k}, wrapping modulo n.
inline PauliString jw_string(int n, int site, int k, char a, char b) {
  std::string s(n, 'I');
  auto at = [n](int j) { return ((j - 1) % n + n) % n; };
  s[at(site)] = a;
  for (int j = 1; j < k; ++j) s[at(site + j)] = 'Z';
  s[at(site + k)] = b;
  return PauliString::parse(s);
}

// Sum_n of a single-site letter.
inline PauliSum field(int n, char letter, double c = 1.0) {
  PauliSum s(n);
  for (int j = 1; j <= n; ++j) s.add(PauliString::single(n, letter, j), c);
  return s;
}

// Sum_n a_n b_{n+1}, periodic or open.
inline PauliSum bond(int n, char a, char b, bool periodic, double c = 1.0) {
  PauliSum s(n);
  const int last = periodic ? n : n - 1;
  for (int j = 1; j <= last; ++j) s.add(string_at(n, {{j, a}, {j + 1, b}}), c);
  return s;
}

}  // namespace kcd::chain
