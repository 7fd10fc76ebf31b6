// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace cgnmt::analysis {

using Sentences = std::vector<std::vector<std::string>>;

/// Distinct types over tokens.
double type_token_ratio(const Sentences& corpus);
/// Unigram entropy in nats.
double word_entropy(const Sentences& corpus);

/// Links (source index, target index) of one sentence pair.
using SentenceAlignment = std::set<std::pair<std::size_t, std::size_t>>;

struct AlignmentSet {
  std::vector<SentenceAlignment> sentences;
  std::size_t links() const;
};

/// Pharaoh "i-j" lines, 0-based source-target.
AlignmentSet parse_pharaoh(const std::vector<std::string>& lines);
std::vector<std::string> to_pharaoh(const AlignmentSet& set);
/// Raises Index errors for links outside the given sentence lengths.
void check_bounds(const AlignmentSet& set, const Sentences& source, const Sentences& target);

struct LinkCounts {
  std::size_t many_to_one = 0;
  std::size_t one_to_many = 0;
  std::size_t total = 0;
};
LinkCounts classify_links(const AlignmentSet& set);
/// (many-to-one - one-to-many) / links.
double alignment_score(const AlignmentSet& set);

/// Grow-diag-final-and over per-sentence forward and backward links.
AlignmentSet symmetrize_gdfa(const AlignmentSet& forward, const AlignmentSet& backward);

struct UniMorphEntry {
  std::string lemma;
  std::string form;
  std::vector<std::string> tags;
};

struct UniMorphLexicon {
  std::vector<UniMorphEntry> entries;
  std::size_t skipped = 0;  // malformed lines
};

/// lemma TAB form TAB tag;tag;...
UniMorphLexicon parse_unimorph(std::string_view text);
UniMorphLexicon read_unimorph(const std::string& path);

struct UniMorphStats {
  std::size_t tags = 0;          // UT
  std::size_t combinations = 0;  // UTC
};
UniMorphStats unimorph_stats(const UniMorphLexicon& lexicon);

}  // namespace cgnmt::analysis
