#include <doctest.h>

#include <atomic>
#include <cstdlib>
#include <stdexcept>
#include <vector>

#include "apsynth/parallel.hpp"

using namespace apsynth;

TEST_SUITE("parallel") {

TEST_CASE("parallel_for visits every index once") {
  for (int threads : {1, 3, 8}) {
    std::vector<std::atomic<int>> hits(1000);
    parallel_for(hits.size(), threads, [&](std::size_t i) { hits[i]++; });
    for (const auto& h : hits) CHECK(h.load() == 1);
  }
  parallel_for(0, 4, [](std::size_t) { FAIL("no work expected"); });
}

TEST_CASE("parallel_for propagates exceptions") {
  CHECK_THROWS_AS(parallel_for(50, 4, [](std::size_t i) {
                    if (i == 17) throw std::runtime_error("boom");
                  }),
                  std::runtime_error);
}

TEST_CASE("thread resolution") {
  CHECK(resolve_threads(3) == 3);
  ::setenv("APSYNTH_THREADS", "5", 1);
  CHECK(resolve_threads(0) == 5);
  ::unsetenv("APSYNTH_THREADS");
  CHECK(resolve_threads(0) >= 1);
}

TEST_CASE("derived seeds are stable and distinct") {
  CHECK(derive_seed(1, 2) == derive_seed(1, 2));
  CHECK(derive_seed(1, 2) != derive_seed(1, 3));
  CHECK(derive_seed(1, 2) != derive_seed(2, 2));
}

}  // TEST_SUITE
