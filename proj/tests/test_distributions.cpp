#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "ipdmeta/distributions.hpp"
#include "ipdmeta/errors.hpp"
#include "oracles.hpp"

using namespace ipdmeta;

TEST_CASE("log_gamma matches factorials and the half-integer identity") {
  CHECK(log_gamma(1.0) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(log_gamma(2.0) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(log_gamma(10.0) == doctest::Approx(std::log(362880.0)).epsilon(1e-13));
  CHECK(log_gamma(0.5) == doctest::Approx(0.5 * std::log(3.14159265358979323846)).epsilon(1e-13));
  for (double x : {0.1, 0.7, 1.3, 3.9, 12.5, 120.0, 1495.0}) {
    CHECK(log_gamma(x) == doctest::Approx(std::lgamma(x)).epsilon(1e-12));
  }
}

TEST_CASE("regularized gamma halves sum to one") {
  for (double a : {0.5, 1.0, 2.5, 10.0, 25.0}) {
    for (double x : {0.0, 0.3, 1.0, 4.0, 30.0, 120.0}) {
      CHECK(regularized_gamma_p(a, x) + regularized_gamma_q(a, x) ==
            doctest::Approx(1.0).epsilon(1e-12));
    }
  }
}

TEST_CASE("normal_cdf agrees with the series oracle") {
  for (double x = -8.0; x <= 8.0; x += 0.25) {
    const double want = static_cast<double>(oracle::normal_cdf(x));
    CHECK(std::fabs(normal_cdf(x) - want) < 1e-9);
  }
}

TEST_CASE("normal_cdf reference points") {
  CHECK(normal_cdf(0.0) == 0.5);
  CHECK(std::fabs(normal_cdf(1.959964) - 0.975) < 1e-6);
  CHECK(std::fabs(normal_cdf(-1.0) - 0.1586553) < 1e-6);
}

TEST_CASE("normal_cdf symmetry is exact") {
  for (double x : {0.0, 0.1, 0.77, 1.5, 2.0, 3.3, 5.0, 7.9}) {
    CHECK(normal_cdf(x) + normal_cdf(-x) == doctest::Approx(1.0).epsilon(1e-15));
  }
}

TEST_CASE("normal_quantile inverts normal_cdf") {
  CHECK(std::fabs(normal_quantile(0.975) - 1.959963984540054) < 1e-9);
  CHECK(std::fabs(normal_quantile(0.5)) < 1e-12);
  for (double p : {0.001, 0.05, 0.3, 0.7, 0.95, 0.999}) {
    CHECK(normal_cdf(normal_quantile(p)) == doctest::Approx(p).epsilon(1e-10));
  }
  CHECK_THROWS_AS(normal_quantile(0.0), ValidationError);
  CHECK_THROWS_AS(normal_quantile(1.0), ValidationError);
}

TEST_CASE("chisq_sf edge cases and oracle checks") {
  CHECK(chisq_sf(0.0, 1) == 1.0);
  CHECK(chisq_sf(0.0, 50) == 1.0);
  CHECK_THROWS_AS(chisq_sf(1.0, 0), ValidationError);
  CHECK_THROWS_AS(chisq_sf(-0.5, 1), ValidationError);

  // df = 1 reduces to the normal tail.
  for (double x : {0.5, 1.0, 2.0, 3.841459, 10.0, 30.0}) {
    const double want = 2.0 * (1.0 - static_cast<double>(oracle::normal_cdf(std::sqrt(x))));
    CHECK(std::fabs(chisq_sf(x, 1) - want) < 1e-10);
  }
  CHECK(std::fabs(chisq_sf(3.841459, 1) - 0.05) < 1e-5);
  CHECK(std::fabs(chisq_sf(2.0, 1) - 0.1573) < 1e-3);

  // Even df has a closed form.
  for (int df : {2, 4, 10, 50}) {
    for (double x : {0.5, 2.0, 9.0, 40.0, 120.0, 200.0}) {
      const double want = static_cast<double>(oracle::chisq_sf_even_df(x, df));
      CHECK(std::fabs(chisq_sf(x, df) - want) < 1e-10);
    }
  }
}

TEST_CASE("student t tails match closed forms") {
  for (double x : {0.0, 0.2, 0.9, 1.0, 1.5, 4.0, 12.0, 80.0}) {
    CHECK(std::fabs(student_t_sf(x, 1.0) - static_cast<double>(oracle::t_sf_df1(x))) < 1e-9);
    CHECK(std::fabs(student_t_sf(x, 2.0) - static_cast<double>(oracle::t_sf_df2(x))) < 1e-9);
    CHECK(student_t_sf(-x, 1.0) == doctest::Approx(1.0 - student_t_sf(x, 1.0)).epsilon(1e-12));
  }
}

TEST_CASE("student t approaches the normal for large dof") {
  for (double x : {0.5, 1.0, 1.96, 2.5}) {
    const double normal_tail = 1.0 - static_cast<double>(oracle::normal_cdf(x));
    CHECK(std::fabs(student_t_sf(x, 3000.0) - normal_tail) < 2e-4);
  }
}

TEST_CASE("student t quantile inverts the cdf") {
  for (double dof : {1.0, 2.0, 7.0, 60.0}) {
    for (double p : {0.025, 0.2, 0.5, 0.9, 0.975}) {
      const double q = student_t_quantile(p, dof);
      CHECK(student_t_cdf(q, dof) == doctest::Approx(p).epsilon(1e-8));
    }
  }
  // Known value: t_{0.975, 10} = 2.228138852.
  CHECK(std::fabs(student_t_quantile(0.975, 10.0) - 2.228138852) < 1e-6);
}
