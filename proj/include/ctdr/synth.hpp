// Copyright 2026 The ctdr Authors. All Rights Reserved.
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//     http://www.apache.org/licenses/LICENSE-2.0
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace ctdr {

struct SynthConfig {
  std::size_t n_trials = 2000;
  std::uint64_t seed = 6;
  double signal = 2.0;           // scales every planted effect
  double base_logit = -9.0;      // log-odds of a trial with no planted effect
  double excluded_fraction = 0.04;
  double malformed_fraction = 0.005;
};

struct SynthCorpus {
  std::vector<std::string> documents;  // one JSON document per entry
  std::vector<double> true_risk;       // planted probability of a dosing-error signal, per document
  std::size_t n_excluded = 0;          // documents built to fail inclusion
  std::size_t n_malformed = 0;
};

/// Registry-style documents with planted risk: some categorical values and
/// some text phrases raise the chance that a trial reports dosing-error
/// adverse events. Deterministic in the config.
SynthCorpus generate_synthetic_corpus(const SynthConfig& cfg);

/// The sample dosing-error term list the generator draws its terms from.
std::string sample_term_list();

/// Writes corpus.ndjson, dosing_terms.tsv and ctdr.conf into \p dir.
void write_synthetic_corpus(const SynthConfig& cfg, const std::string& dir);

}  // namespace ctdr
