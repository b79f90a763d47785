#pragma once

#include "data/dataset.hpp"

namespace wad::data {

// Deterministic desk-scale corpus: templated benign requests plus malicious
// ones formed by injecting an XSS / SQLi / command-injection / path-traversal
// payload into exactly one parameter slot (index recorded as gt_param).
// Classes are balanced (n/2 benign). Requires n >= 10.
Dataset generate_synthetic(long n, uint64_t seed);

// Raw HTTP text of a synthetic record stream ("---"-separated), for feeding
// the file-based interfaces.
std::string synthetic_raw_corpus(long n, uint64_t seed);

}  // namespace wad::data
