#include <doctest.h>

#include "hpen/validate.hpp"

using namespace hpen;

TEST_CASE("property suite passes for several seeds") {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const auto results = run_property_suite(seed);
    CHECK(results.size() >= 10);
    for (const auto& r : results) {
      INFO(r.name << " " << r.detail);
      CHECK(r.passed);
    }
  }
}
