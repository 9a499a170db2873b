#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <set>
#include <sstream>

#include "confpinn/csv.hpp"
#include "confpinn/error.hpp"
#include "confpinn/format.hpp"
#include "confpinn/random.hpp"

namespace {

using namespace confpinn;

TEST(Seeds, DerivedSeedsAreStableAndDistinct)
{
    EXPECT_EQ(derive_seed(1, 2, 3), derive_seed(1, 2, 3));
    std::set<std::uint64_t> seen;
    for (std::uint64_t s = 0; s < 4; ++s) {
        for (std::uint64_t i = 0; i < 1000; ++i) {
            seen.insert(derive_seed(7, s, i));
            seen.insert(derive_seed(8, s, i));
        }
    }
    EXPECT_EQ(seen.size(), 8000u);
}

TEST(Seeds, PermutationIsAPermutation)
{
    Rng rng(3);
    auto p = random_permutation(500, rng);
    std::sort(p.begin(), p.end());
    for (std::size_t i = 0; i < p.size(); ++i) {
        EXPECT_EQ(p[i], i);
    }
}

TEST(Format, ShortestRoundTrip)
{
    Rng rng(5);
    std::uniform_real_distribution<double> d(-1e6, 1e6);
    for (int i = 0; i < 10000; ++i) {
        const double v = d(rng) * std::pow(10.0, (i % 40) - 20);
        EXPECT_EQ(parse_double(format_double(v)), v);
    }
    EXPECT_EQ(format_double(0.1), "0.1");
    EXPECT_EQ(parse_double(format_double(std::numeric_limits<double>::infinity())),
              std::numeric_limits<double>::infinity());
    EXPECT_EQ(parse_double(" +2.5 "), 2.5);
}

TEST(Format, StrictParse)
{
    for (const char* bad : {"", "abc", "1.0x", "1,0", "--1"}) {
        EXPECT_THROW(parse_double(bad), ParseError) << bad;
    }
}

TEST(Csv, ReadAndColumns)
{
    std::stringstream ss("a,b,c\n1,2,3\n\n4,5,6\n");
    const auto t = csv::read(ss);
    EXPECT_EQ(t.rows.size(), 2u);
    EXPECT_EQ(t.numbers("b"), (std::vector<double>{2.0, 5.0}));
    EXPECT_TRUE(t.has_column("c"));
    try {
        t.column("truth");
        FAIL();
    }
    catch (const ParseError& e) {
        EXPECT_NE(std::string(e.what()).find("truth"), std::string::npos);
    }
}

TEST(Csv, RaggedRowNamesLine)
{
    std::stringstream ss("a,b\n1,2\n3\n");
    try {
        csv::read(ss);
        FAIL();
    }
    catch (const ParseError& e) {
        EXPECT_NE(std::string(e.what()).find("3"), std::string::npos);
    }
}

} // namespace
