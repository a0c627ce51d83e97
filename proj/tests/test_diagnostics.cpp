// SPDX-License-Identifier: Apache-2.0
#include "hodgefem/diagnostics.hpp"

#include <gtest/gtest.h>

#include <sstream>

using namespace hodgefem;

namespace {

const std::vector<SuiteResult> &default_results() {
  static const std::vector<SuiteResult> results = run_diagnostics();
  return results;
}

const SuiteResult *find(const std::vector<SuiteResult> &results, const std::string &name) {
  for (const auto &r : results)
    if (r.name == name) return &r;
  return nullptr;
}

}  // namespace

TEST(Diagnose, AllSuitesPass) {
  const auto &results = default_results();
  EXPECT_EQ(results.size(), 11u);
  for (const auto &r : results) EXPECT_TRUE(r.pass) << r.name << ": " << r.detail;
  EXPECT_TRUE(all_passed(results));
  std::ostringstream os;
  print_table(os, results);
  EXPECT_NE(os.str().find("dorfler-minimality"), std::string::npos);
}

TEST(Diagnose, SignFlippedJumpIsCaught) {
  DiagnoseOptions options;
  options.jump = [](const PiecewiseForm &w, const Mesh &mesh, int e) {
    auto j = trace_star_jump(w, mesh, e);
    for (double &v : j) v = -v;
    return j;
  };
  const auto results = run_diagnostics(options);
  EXPECT_FALSE(all_passed(results));
  const SuiteResult *ip = find(results, "ip-identity");
  ASSERT_NE(ip, nullptr);
  EXPECT_FALSE(ip->pass);
  for (const auto &r : results)
    if (r.name != "ip-identity") EXPECT_TRUE(r.pass) << r.name;
}

TEST(Diagnose, OutcomeIsSeedIndependent) {
  DiagnoseOptions options;
  options.seed = 12345;
  const auto other = run_diagnostics(options);
  const auto &base = default_results();
  ASSERT_EQ(other.size(), base.size());
  for (std::size_t i = 0; i < base.size(); ++i) {
    EXPECT_EQ(other[i].name, base[i].name);
    EXPECT_EQ(other[i].pass, base[i].pass) << base[i].name;
  }
}
