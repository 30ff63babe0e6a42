#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "srsanon/rng.hpp"

using namespace srsanon;

TEST_CASE("identical keys reproduce identical draws") {
    KeyedStream a(42), b(42);
    a.mix("laplace").mix(3).mix("Age").mix("case-9");
    b.mix("laplace").mix(3).mix("Age").mix("case-9");
    for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
}

TEST_CASE("key components matter") {
    KeyedStream a(42), b(42), c(43);
    a.mix("laplace").mix(3);
    b.mix("laplace").mix(4);
    c.mix("laplace").mix(3);
    CHECK(a.next_u64() != b.next_u64());
    KeyedStream a2(42);
    a2.mix("laplace").mix(3);
    a2.next_u64();
    CHECK(a2.next_u64() != c.next_u64());
}

TEST_CASE("string mixing is not concatenation-ambiguous") {
    KeyedStream a(1), b(1);
    a.mix("ab").mix("c");
    b.mix("a").mix("bc");
    CHECK(a.next_u64() != b.next_u64());
}

TEST_CASE("unit draws stay in [0,1)") {
    KeyedStream s(9);
    for (int i = 0; i < 10000; ++i) {
        const double u = s.next_unit();
        CHECK(u >= 0.0);
        CHECK(u < 1.0);
    }
}

TEST_CASE("laplace edge cases") {
    KeyedStream s(5);
    CHECK(s.laplace(0.0) == 0.0);
    CHECK_THROWS_AS(s.laplace(-1.0), ArgumentError);
}

TEST_CASE("laplace empirical moments") {
    // Laplace(0, b) has mean 0 and variance 2 b^2.
    const int n = 100000;
    for (double b : {1.0, 2.0}) {
        KeyedStream s(1234);
        s.mix("moment-suite").mix(b == 1.0 ? 1 : 2);
        double sum = 0.0, sum2 = 0.0;
        for (int i = 0; i < n; ++i) {
            const double x = s.laplace(b);
            sum += x;
            sum2 += x * x;
        }
        const double mean = sum / n;
        const double var = sum2 / n - mean * mean;
        CHECK(std::fabs(mean) < 0.02 * b);
        CHECK(var == doctest::Approx(2.0 * b * b).epsilon(0.05));
    }
}

TEST_CASE("laplace median and symmetry") {
    KeyedStream s(77);
    s.mix("sign-suite");
    const int n = 100000;
    int pos = 0;
    for (int i = 0; i < n; ++i)
        if (s.laplace(1.0) > 0.0) ++pos;
    // Sign is a fair coin: 3 standard errors around n/2.
    CHECK(std::fabs(pos - n / 2.0) < 3.0 * std::sqrt(n / 4.0));
}
