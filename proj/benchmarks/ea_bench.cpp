// Hot paths at corpus scale: 150 summaries, novels of a few hundred
// thousand tokens, 22,350 cross-novel BLEU pairs.

#include <benchmark/benchmark.h>

#include <random>
#include <string>

#include "ea/aligner.hpp"
#include "ea/engagement.hpp"
#include "ea/stats.hpp"
#include "ea/style.hpp"
#include "ea/text.hpp"

namespace {

std::vector<double> random_values(std::size_t n, unsigned seed, int levels) {
  std::mt19937 rng(seed);
  std::uniform_int_distribution<int> d(0, levels - 1);
  std::vector<double> v(n);
  for (auto& x : v) x = d(rng);
  return v;
}

std::string random_text(std::size_t words, unsigned seed) {
  static const char* vocab[] = {"the",   "castle", "night",  "she",    "father", "forest", "carriage",
                                "laura", "dream",  "blood",  "chapel", "letter", "general", "portrait",
                                "and",   "of",     "walked", "spoke",  "pale",   "ruin"};
  std::mt19937 rng(seed);
  std::uniform_int_distribution<int> d(0, 19), stop(0, 14);
  std::string out;
  for (std::size_t i = 0; i < words; ++i) {
    out += vocab[d(rng)];
    out += stop(rng) == 0 ? ". " : " ";
    if (i % 120 == 119) out += "\n\n";
  }
  return out;
}

}  // namespace

static void BM_KendallTauB(benchmark::State& state) {
  const auto x = random_values(static_cast<std::size_t>(state.range(0)), 1, 40);
  const auto y = random_values(static_cast<std::size_t>(state.range(0)), 2, 40);
  for (auto _ : state) benchmark::DoNotOptimize(ea::kendall_tau_b(x, y));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_KendallTauB)->RangeMultiplier(4)->Range(64, 65536)->Complexity(benchmark::oNLogN);

static void BM_KsStatistic(benchmark::State& state) {
  std::mt19937 rng(3);
  std::normal_distribution<double> nd;
  std::vector<double> a(static_cast<std::size_t>(state.range(0))), b(a.size());
  for (auto& v : a) v = nd(rng);
  for (auto& v : b) v = nd(rng) + 0.1;
  for (auto _ : state) benchmark::DoNotOptimize(ea::ks_statistic(a, b));
}
BENCHMARK(BM_KsStatistic)->Arg(150)->Arg(1500)->Arg(15000);

static void BM_BhAdjust(benchmark::State& state) {
  std::mt19937 rng(4);
  std::uniform_real_distribution<double> u;
  std::vector<double> p(static_cast<std::size_t>(state.range(0)));
  for (auto& v : p) v = u(rng);
  for (auto _ : state) benchmark::DoNotOptimize(ea::bh_adjust(p, 0.01));
}
BENCHMARK(BM_BhAdjust)->Arg(48)->Arg(1024);

static void BM_TfidfAlign(benchmark::State& state) {
  ea::Novel novel;
  novel.id = "n";
  const int chapters = static_cast<int>(state.range(0));
  for (int c = 1; c <= chapters; ++c) {
    ea::Chapter ch;
    ch.index = c;
    ch.text = random_text(4000, 100 + c);
    ch.token_count = ea::count_tokens(ch.text);
    novel.chapters.push_back(std::move(ch));
  }
  ea::Summary s;
  s.id = "s";
  s.novel_id = "n";
  s.sentences = ea::split_sentences(random_text(1000, 7));
  for (auto _ : state) benchmark::DoNotOptimize(ea::align_tfidf(s, novel));
}
BENCHMARK(BM_TfidfAlign)->Arg(20)->Arg(60)->Unit(benchmark::kMillisecond);

static void BM_BleuPair(benchmark::State& state) {
  const ea::NgramProfile cand(random_text(static_cast<std::size_t>(state.range(0)), 11));
  const ea::NgramProfile ref(random_text(static_cast<std::size_t>(state.range(0)), 12));
  for (auto _ : state) benchmark::DoNotOptimize(ea::bleu(cand, ref));
}
BENCHMARK(BM_BleuPair)->Arg(1000)->Arg(4000);

static void BM_BleuProfile(benchmark::State& state) {
  const std::string text = random_text(1000, 13);
  for (auto _ : state) benchmark::DoNotOptimize(ea::NgramProfile(text));
}
BENCHMARK(BM_BleuProfile);

BENCHMARK_MAIN();
