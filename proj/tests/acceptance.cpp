// Runs every acceptance criterion once and prints one line per criterion.

#include <iostream>

#include <gtest/gtest.h>

#include "detbound/selftest.hpp"

TEST(Acceptance, AllCriteria) {
  const auto results = detbound::selftest::run({}, [](const detbound::selftest::Outcome& r) {
    detbound::selftest::print(std::cout, r);
    std::cout.flush();
  });
  ASSERT_EQ(results.size(), 14u);
  for (const auto& r : results) EXPECT_TRUE(r.pass) << "criterion " << r.id << " (" << r.name << "): " << r.detail;
}
