// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <Eigen/Dense>

#include <cmath>
#include <map>
#include <random>
#include <set>
#include <unordered_set>

#include "analysis/features.hpp"
#include "analysis/regression.hpp"
#include "tensor/errors.hpp"

using namespace cgnmt;
using namespace cgnmt::analysis;

namespace {

Sentences random_corpus(std::mt19937& rng, std::size_t tokens, std::size_t types) {
  Sentences out(1);
  for (std::size_t i = 0; i < tokens; ++i) {
    if (rng() % 12 == 0) out.emplace_back();
    out.back().push_back("t" + std::to_string(rng() % types));
  }
  return out;
}

AlignmentSet one(SentenceAlignment a) { return AlignmentSet{{std::move(a)}}; }

// Reference grow-diag-final-and, written as a literal transcription of the
// usual pseudo-code with explicit sentence lengths.
SentenceAlignment reference_gdfa(const SentenceAlignment& f, const SentenceAlignment& b, std::size_t slen, std::size_t tlen) {
  SentenceAlignment uni = f, a;
  uni.insert(b.begin(), b.end());
  for (const auto& p : f)
    if (b.count(p)) a.insert(p);
  auto src_aligned = [&](std::size_t i) {
    for (const auto& p : a)
      if (p.first == i) return true;
    return false;
  };
  auto tgt_aligned = [&](std::size_t j) {
    for (const auto& p : a)
      if (p.second == j) return true;
    return false;
  };
  bool added = true;
  while (added) {
    added = false;
    for (std::size_t i = 0; i < slen; ++i)
      for (std::size_t j = 0; j < tlen; ++j) {
        if (!a.count({i, j})) continue;
        const int order[8][2] = {{-1, 0}, {0, -1}, {1, 0}, {0, 1}, {-1, -1}, {-1, 1}, {1, -1}, {1, 1}};
        for (const auto& d : order) {
          const long ni = long(i) + d[0], nj = long(j) + d[1];
          if (ni < 0 || nj < 0 || ni >= long(slen) || nj >= long(tlen)) continue;
          const std::pair<std::size_t, std::size_t> p{std::size_t(ni), std::size_t(nj)};
          if (!a.count(p) && uni.count(p) && (!src_aligned(p.first) || !tgt_aligned(p.second))) {
            a.insert(p);
            added = true;
          }
        }
      }
  }
  for (const auto* dir : {&f, &b})
    for (std::size_t i = 0; i < slen; ++i)
      for (std::size_t j = 0; j < tlen; ++j)
        if (dir->count({i, j}) && !src_aligned(i) && !tgt_aligned(j)) a.insert({i, j});
  return a;
}

}  // namespace

TEST_CASE("type-token ratio") {
  CHECK(type_token_ratio({{"a", "a", "b"}}) == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
  CHECK(type_token_ratio({{"a", "b"}, {"c"}}) == 1.0);
  CHECK_THROWS_AS(type_token_ratio({}), Error);
  CHECK_THROWS_AS(type_token_ratio({{}, {}}), Error);
  std::mt19937 rng(1);
  const auto corpus = random_corpus(rng, 10000, 3000);
  std::unordered_set<std::string> types;
  std::size_t tokens = 0;
  for (const auto& s : corpus)
    for (const auto& t : s) {
      types.insert(t);
      ++tokens;
    }
  CHECK(type_token_ratio(corpus) == double(types.size()) / double(tokens));
}

TEST_CASE("word entropy") {
  CHECK(word_entropy({{"x", "x", "x"}}) == 0.0);
  for (std::size_t k : {2u, 5u, 17u, 64u}) {
    Sentences s(1);
    for (std::size_t r = 0; r < 3; ++r)
      for (std::size_t i = 0; i < k; ++i) s[0].push_back("v" + std::to_string(i));
    CHECK(std::abs(word_entropy(s) - std::log(double(k))) < 1e-12);
  }
  CHECK_THROWS_AS(word_entropy({}), Error);
  std::mt19937 rng(4);
  for (int trial = 0; trial < 10; ++trial) {
    const auto corpus = random_corpus(rng, 2000, 1 + rng() % 300);
    std::map<std::string, double> count;
    double n = 0;
    for (const auto& s : corpus)
      for (const auto& t : s) {
        count[t] += 1;
        n += 1;
      }
    double h = 0;
    for (const auto& [t, c] : count) h += -(c / n) * std::log(c / n);
    CHECK(std::abs(word_entropy(corpus) - h) < 1e-12);
  }
}

TEST_CASE("alignment score on the six-link fixture") {
  const auto fig = one({{0, 0}, {0, 1}, {1, 2}, {2, 3}, {3, 3}, {4, 3}});
  const auto c = classify_links(fig);
  CHECK(c.many_to_one == 3);
  CHECK(c.one_to_many == 2);
  CHECK(c.total == 6);
  CHECK(alignment_score(fig) == 1.0 / 6.0);
  CHECK(alignment_score(one({{0, 0}, {1, 1}, {2, 2}})) == 0.0);
  CHECK_THROWS_AS(alignment_score(AlignmentSet{{{}, {}}}), Error);
}

TEST_CASE("alignment score matches a degree-count oracle and its invariants") {
  std::mt19937 rng(9);
  for (int trial = 0; trial < 300; ++trial) {
    AlignmentSet set, swapped;
    const std::size_t pairs = 1 + rng() % 4;
    for (std::size_t k = 0; k < pairs; ++k) {
      SentenceAlignment a, s;
      const std::size_t n = 1 + rng() % 10;
      for (std::size_t l = 0; l < n; ++l) {
        const std::size_t i = rng() % 6, j = rng() % 6;
        a.emplace(i, j);
        s.emplace(j, i);
      }
      set.sentences.push_back(a);
      swapped.sentences.push_back(s);
    }
    long m2o = 0, o2m = 0, total = 0;
    bool both = false;
    for (const auto& a : set.sentences)
      for (const auto& [i, j] : a) {
        int src_deg = 0, tgt_deg = 0;
        for (const auto& [i2, j2] : a) {
          src_deg += i2 == i;
          tgt_deg += j2 == j;
        }
        m2o += tgt_deg >= 2;
        o2m += src_deg >= 2;
        both |= tgt_deg >= 2 && src_deg >= 2;
        ++total;
      }
    const double score = alignment_score(set);
    CHECK(score == double(m2o - o2m) / double(total));
    CHECK(score >= -1.0);
    CHECK(score <= 1.0);
    if (!both) CHECK(alignment_score(swapped) == -score);
  }
}

TEST_CASE("pharaoh round trip and bounds") {
  const auto set = parse_pharaoh({"0-0 0-1 1-2", "", "2-0"});
  REQUIRE(set.sentences.size() == 3);
  CHECK(set.links() == 4);
  CHECK(to_pharaoh(set) == std::vector<std::string>{"0-0 0-1 1-2", "", "2-0"});
  CHECK_THROWS_AS(parse_pharaoh({"0-x"}), Error);
  CHECK_THROWS_AS(parse_pharaoh({"01"}), Error);
  check_bounds(set, {{"a", "b"}, {"c"}, {"d", "e", "f"}}, {{"x", "y", "z"}, {"w"}, {"v"}});
  try {
    check_bounds(set, {{"a"}, {"c"}, {"d", "e", "f"}}, {{"x", "y", "z"}, {"w"}, {"v"}});
    FAIL("expected an index error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::Index);
  }
}

TEST_CASE("grow-diag-final-and") {
  const SentenceAlignment same{{0, 0}, {1, 2}, {2, 1}};
  CHECK(symmetrize_gdfa(one(same), one(same)).sentences[0] == same);

  // Disjoint, non-adjacent directions on a 2x2 pair: nothing to grow from,
  // and final-and adds each link because both of its words are unaligned.
  const auto disjoint = symmetrize_gdfa(one({{0, 1}}), one({{1, 0}})).sentences[0];
  CHECK(disjoint == SentenceAlignment{{0, 1}, {1, 0}});

  // Forward {0-0, 1-1}, backward {0-0, 0-1}: intersection {0-0}. Growing from
  // 0-0 reaches 0-1 (target 1 unaligned) before 1-1, after which 1-1 joins
  // because source 1 is still unaligned.
  const auto grown = symmetrize_gdfa(one({{0, 0}, {1, 1}}), one({{0, 0}, {0, 1}})).sentences[0];
  CHECK(grown == SentenceAlignment{{0, 0}, {0, 1}, {1, 1}});

  // Final-and skips a link whose words are already aligned.
  const auto blocked = symmetrize_gdfa(one({{0, 0}, {2, 2}}), one({{0, 0}, {0, 2}})).sentences[0];
  CHECK(blocked == SentenceAlignment{{0, 0}, {2, 2}});

  std::mt19937 rng(12);
  for (int trial = 0; trial < 300; ++trial) {
    SentenceAlignment f, b;
    const std::size_t slen = 1 + rng() % 6, tlen = 1 + rng() % 6;
    for (std::size_t l = 0; l < 1 + rng() % 8; ++l) f.emplace(rng() % slen, rng() % tlen);
    for (std::size_t l = 0; l < 1 + rng() % 8; ++l) b.emplace(rng() % slen, rng() % tlen);
    const auto out = symmetrize_gdfa(one(f), one(b)).sentences[0];
    std::size_t sl = 0, tl = 0;
    for (const auto* d : {&f, &b})
      for (const auto& [i, j] : *d) {
        sl = std::max(sl, i + 1);
        tl = std::max(tl, j + 1);
      }
    CHECK(out == reference_gdfa(f, b, sl, tl));
    for (const auto& p : f)
      if (b.count(p)) CHECK(out.count(p));
    for (const auto& p : out) CHECK((f.count(p) || b.count(p)));
  }
}

TEST_CASE("unimorph statistics") {
  auto lex = parse_unimorph("walk\twalked\tV;PST\n");
  CHECK(unimorph_stats(lex).tags == 2);
  CHECK(unimorph_stats(lex).combinations == 1);

  lex = parse_unimorph("marcher\tmarchai\tV;IND;PST;1;SG;PFV\n");
  CHECK(unimorph_stats(lex).tags == 6);
  CHECK(unimorph_stats(lex).combinations == 1);

  lex = parse_unimorph("a\tb\tN;SG\nbroken line\nc\td\t\n\ne\tf\tSG;N\r\ng\th\tN;PL;NOM\n");
  CHECK(lex.entries.size() == 3);
  CHECK(lex.skipped == 2);
  CHECK(unimorph_stats(lex).tags == 4);
  CHECK(unimorph_stats(lex).combinations == 2);
  CHECK_THROWS_AS(unimorph_stats(UniMorphLexicon{}), Error);

  std::mt19937 rng(6);
  for (int trial = 0; trial < 30; ++trial) {
    UniMorphLexicon l;
    std::set<std::string> tags;
    std::set<std::set<std::string>> combos;
    std::size_t total_tags = 0;
    for (std::size_t e = 0; e < 1 + rng() % 50; ++e) {
      UniMorphEntry entry{"l", "f", {}};
      for (std::size_t k = 0; k < 1 + rng() % 4; ++k) entry.tags.push_back("T" + std::to_string(rng() % 12));
      tags.insert(entry.tags.begin(), entry.tags.end());
      combos.emplace(entry.tags.begin(), entry.tags.end());
      total_tags += entry.tags.size();
      l.entries.push_back(entry);
    }
    const auto s = unimorph_stats(l);
    CHECK(s.tags == tags.size());
    CHECK(s.combinations == combos.size());
    CHECK(s.combinations <= l.entries.size());
    CHECK(s.tags <= total_tags);
  }
}

TEST_CASE("pearson") {
  const std::vector<double> x{1, 2, 3, 4, 5.5};
  std::vector<double> y, neg;
  for (double v : x) {
    y.push_back(2 * v + 1);
    neg.push_back(-v);
  }
  CHECK(pearson(x, y) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(pearson(x, neg) == doctest::Approx(-1.0).epsilon(1e-15));
  CHECK_THROWS_AS(pearson({1, 1, 1}, {1, 2, 3}), Error);
  CHECK_THROWS_AS(pearson({1}, {1}), Error);
  CHECK_THROWS_AS(pearson({1, 2}, {1, 2, 3}), Error);

  std::mt19937 rng(8);
  std::normal_distribution<double> n(0, 1);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t m = 2 + rng() % 30;
    std::vector<double> a(m), b(m), shifted(m);
    for (std::size_t i = 0; i < m; ++i) {
      a[i] = n(rng);
      b[i] = 0.5 * a[i] + n(rng);
    }
    Eigen::Map<Eigen::VectorXd> va(a.data(), long(m)), vb(b.data(), long(m));
    const Eigen::VectorXd ca = va.array() - va.mean(), cb = vb.array() - vb.mean();
    const double oracle = ca.dot(cb) / (ca.norm() * cb.norm());
    CHECK(std::abs(pearson(a, b) - oracle) < 1e-12);
    const double scale = 0.1 + double(rng() % 100), shift = n(rng) * 10;
    for (std::size_t i = 0; i < m; ++i) shifted[i] = scale * a[i] + shift;
    CHECK(std::abs(pearson(shifted, b) - pearson(a, b)) < 1e-12);
  }
}

TEST_CASE("relative gain") {
  CHECK(std::abs(relative_gain(21.49, 18.44) - 0.16540) < 1e-5);
  CHECK(std::abs(relative_gain(15.30, 12.94) - 0.18238) < 1e-5);
  CHECK(relative_gain(20, 20) == 0.0);
  CHECK_THROWS_AS(relative_gain(1, 0), Error);
}

TEST_CASE("min-max normalization") {
  const std::vector<std::vector<double>> rows{{1, 5, 3}, {3, 5, -1}, {2, 5, 0.7}};
  const auto n = min_max_normalize(rows);
  CHECK(n[0] == std::vector<double>{0, 0, 1});
  CHECK(n[1] == std::vector<double>{1, 0, 0});
  CHECK(n[2][0] == 0.5);
  CHECK(min_max_normalize(n) == n);
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> u(-50, 50);
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<std::vector<double>> r(2 + rng() % 10, std::vector<double>(5));
    for (auto& row : r)
      for (auto& v : row) v = u(rng);
    const auto once = min_max_normalize(r);
    CHECK(min_max_normalize(once) == once);
    for (std::size_t c = 0; c < 5; ++c) {
      double lo = 2, hi = -1;
      for (const auto& row : once) {
        lo = std::min(lo, row[c]);
        hi = std::max(hi, row[c]);
      }
      CHECK(lo == 0.0);
      CHECK(hi == 1.0);
    }
  }
}

TEST_CASE("feature table TSV") {
  const std::string tsv = "lang\tTT\tA\tH\tUT\tUTC\tgain\ncs\t0.1\t0.2\t7.5\t80\t300\t0.165\nde\t0.05\t-0.1\t6.9\t60\t200\t0.02\n";
  const auto t = parse_feature_table(tsv);
  REQUIRE(t.rows.size() == 2);
  CHECK(t.rows[0].lang == "cs");
  CHECK(t.rows[0].x[2] == 7.5);
  CHECK(t.rows[1].gain == 0.02);
  CHECK(parse_feature_table(format_feature_table(t)).rows[1].x == t.rows[1].x);
  CHECK_THROWS_AS(parse_feature_table("lang\tTT\n"), Error);
  CHECK_THROWS_AS(parse_feature_table("lang\tTT\tA\tH\tUT\tUTC\tgain\ncs\t1\t2\n"), Error);
  CHECK_THROWS_AS(parse_feature_table("lang\tTT\tA\tH\tUT\tUTC\tgain\ncs\t1\t2\t3\t4\t5\tx\n"), Error);
}

TEST_CASE("ridge: degenerate single-feature fit approaches least squares") {
  // One language, one feature: the augmented design has two identical
  // columns, so the fitted prediction is the least-squares line through 0.
  const std::vector<std::vector<double>> x{{0.1}, {0.4}, {0.7}, {1.0}};
  const std::vector<double> y{0.3, 0.75, 1.6, 2.1};
  const auto m = fit_augmented({"xx", "xx", "xx", "xx"}, x, y, 1e-9);
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += x[i][0] * y[i];
    sxx += x[i][0] * x[i][0];
  }
  for (std::size_t i = 0; i < x.size(); ++i) CHECK(std::abs(m.predict(i) - sxy / sxx * x[i][0]) < 1e-6);
  CHECK(m.general[0] == doctest::Approx(m.per_language[0][0]).epsilon(1e-4));
  CHECK_THROWS_AS(fit_augmented({"xx", "xx", "xx", "xx"}, x, y, 0.0), Error);
}

TEST_CASE("ridge: zero-noise synthetic data recovers planted weights") {
  std::mt19937 rng(21);
  std::uniform_real_distribution<double> u(0, 1);
  const std::size_t F = 5, L = 3, per_lang = 40;
  std::vector<double> phi_all(F);
  std::vector<std::vector<double>> phi(L, std::vector<double>(F));
  for (auto& v : phi_all) v = u(rng) * 2 - 1;
  for (auto& b : phi)
    for (auto& v : b) v = u(rng) * 2 - 1;
  std::vector<std::vector<double>> x;
  std::vector<double> y;
  std::vector<std::string> langs;
  for (std::size_t l = 0; l < L; ++l) {
    for (std::size_t r = 0; r < per_lang; ++r) {
      std::vector<double> row(F);
      for (auto& v : row) v = u(rng);
      x.push_back(row);
      langs.push_back("l" + std::to_string(l));
    }
  }
  // The data only pin down phi_all + phi_l per language. As lambda -> 0 the
  // ridge picks the minimum-norm split, phi_all = sum_l phi_l, so the
  // planted weights are built in that form.
  std::vector<std::vector<double>> d(L, std::vector<double>(F));
  for (std::size_t l = 0; l < L; ++l)
    for (std::size_t c = 0; c < F; ++c) d[l][c] = phi[l][c];
  for (std::size_t c = 0; c < F; ++c) {
    phi_all[c] = 0;
    for (std::size_t l = 0; l < L; ++l) phi_all[c] += d[l][c];
  }
  for (std::size_t r = 0; r < x.size(); ++r) {
    const std::size_t l = std::size_t(langs[r][1] - '0');
    double v = 0;
    for (std::size_t c = 0; c < F; ++c) v += x[r][c] * (phi_all[c] + d[l][c]);
    y.push_back(v);
  }
  const auto m = fit_augmented(langs, x, y, 1e-9);
  double err = 0;
  for (std::size_t c = 0; c < F; ++c) err += (m.general[c] - phi_all[c]) * (m.general[c] - phi_all[c]);
  for (std::size_t l = 0; l < L; ++l)
    for (std::size_t c = 0; c < F; ++c) err += (m.per_language[l][c] - d[l][c]) * (m.per_language[l][c] - d[l][c]);
  CHECK(std::sqrt(err) < 1e-3);
}

TEST_CASE("ridge matches an independent dense solve and is a minimum") {
  std::mt19937 rng(17);
  std::uniform_real_distribution<double> u(0, 30);
  FeatureTable table;
  const std::vector<std::string> langs{"cs", "de", "fi", "tr", "cs", "hu"};
  for (const auto& l : langs) {
    FeatureRow r;
    r.lang = l;
    for (auto& v : r.x) v = u(rng);
    r.gain = u(rng) / 100;
    table.rows.push_back(r);
  }
  const auto m = fit_feature_augmented_ridge(table, 0.05);
  REQUIRE(m.languages.size() == 5);
  CHECK(m.general.size() == 5);
  for (const auto& b : m.per_language) CHECK(b.size() == 5);

  // Oracle: build the augmented design by hand, solve with a QR of the
  // stacked system [X; sqrt(lambda) I] w = [y; 0].
  std::vector<std::vector<double>> raw;
  for (const auto& r : table.rows) raw.emplace_back(r.x.begin(), r.x.end());
  const auto xn = min_max_normalize(raw);
  std::map<std::string, int> block;
  for (const auto& l : langs) block.emplace(l, int(block.size()));
  const long cols = 5 * (1 + long(m.languages.size())), rows = long(langs.size());
  Eigen::MatrixXd S = Eigen::MatrixXd::Zero(rows + cols, cols);
  Eigen::VectorXd t = Eigen::VectorXd::Zero(rows + cols);
  std::map<std::string, int> order;
  for (const auto& l : langs) order.emplace(l, 0);
  int next = 0;
  std::map<std::string, int> first_seen;
  for (const auto& l : langs)
    if (!first_seen.count(l)) first_seen[l] = next++;
  for (long r = 0; r < rows; ++r) {
    const long off = 5 * (1 + first_seen[langs[std::size_t(r)]]);
    for (long c = 0; c < 5; ++c) {
      S(r, c) = xn[std::size_t(r)][std::size_t(c)];
      S(r, off + c) = xn[std::size_t(r)][std::size_t(c)];
    }
    t(r) = table.rows[std::size_t(r)].gain;
  }
  for (long c = 0; c < cols; ++c) S(rows + c, c) = std::sqrt(0.05);
  const Eigen::VectorXd w = S.colPivHouseholderQr().solve(t);
  const auto flat = m.flat();
  for (long c = 0; c < cols; ++c) CHECK(std::abs(flat[std::size_t(c)] - w(c)) < 1e-8);

  const double base = m.objective();
  for (std::size_t k = 0; k < flat.size(); ++k)
    for (double d : {1e-3, -1e-3}) {
      auto p = flat;
      p[k] += d;
      CHECK(m.objective(p) >= base);
    }

  const auto report = format_weights(m, {"TT", "A", "H", "UT", "UTC"});
  CHECK(report.rfind("weights\tTT\tA\tH\tUT\tUTC\nALL\t", 0) == 0);
  CHECK(std::count(report.begin(), report.end(), '\n') == 7);

  FeatureTable single;
  single.rows = {table.rows[0], table.rows[4]};
  CHECK_THROWS_AS(fit_feature_augmented_ridge(single), Error);
}
