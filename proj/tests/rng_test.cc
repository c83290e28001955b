#include <gtest/gtest.h>

#include <algorithm>
#include <vector>

#include "prefsim/rng.hpp"

using prefsim::Xorshift64Star;

// Expected values computed independently from the published update rule.
TEST(Rng, KnownAnswerSequences) {
    Xorshift64Star a(1);
    EXPECT_EQ(a.next(), 0x47e4ce4b896cdd1dull);
    EXPECT_EQ(a.next(), 0xabcfa6a8e079651dull);
    EXPECT_EQ(a.next(), 0xb9d10d8feb731f57ull);

    Xorshift64Star b(42);
    EXPECT_EQ(b.next(), 0x56ce4ab7719ba3a0ull);
    EXPECT_EQ(b.next(), 0xc841eb53ebbb2ddaull);
    EXPECT_EQ(b.next(), 0xca466be0c9980276ull);

    Xorshift64Star c(0x123456789abcdefull);
    EXPECT_EQ(c.next(), 0x7c9482472cb6708cull);
    EXPECT_EQ(c.next(), 0xd5705692bf1f28deull);
    EXPECT_EQ(c.next(), 0x88b71e3ba5e005c0ull);
}

TEST(Rng, ZeroSeedRemapped) {
    Xorshift64Star z(0);
    Xorshift64Star g(0x9E3779B97F4A7C15ull);
    EXPECT_EQ(z.next(), g.next());
}

TEST(Rng, NextBelowIsModulo) {
    Xorshift64Star a(7), b(7);
    for (int i = 0; i < 100; ++i) EXPECT_EQ(a.next_below(10), b.next() % 10);
}

TEST(Rng, ForkIsIndependentStream) {
    Xorshift64Star a(99);
    Xorshift64Star child = a.fork();
    Xorshift64Star b(99);
    Xorshift64Star child2 = b.fork();
    for (int i = 0; i < 10; ++i) EXPECT_EQ(child.next(), child2.next());
    EXPECT_EQ(a.next(), b.next()); // parent stream undisturbed beyond the fork draw
}

TEST(Rng, ShuffleDeterministicPermutation) {
    std::vector<int> v1 = {0, 1, 2, 3, 4, 5, 6, 7};
    std::vector<int> v2 = v1;
    Xorshift64Star a(5), b(5);
    a.shuffle(v1);
    b.shuffle(v2);
    EXPECT_EQ(v1, v2);
    std::vector<int> sorted = v1;
    std::sort(sorted.begin(), sorted.end());
    EXPECT_EQ(sorted, (std::vector<int>{0, 1, 2, 3, 4, 5, 6, 7}));
}
