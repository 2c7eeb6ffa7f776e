#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <stdexcept>

#include "doctest.h"

#include "betaforest/special_functions.hpp"

using namespace betaforest;

namespace {

// ln Gamma reference values computed with mpmath at 40 digits.
struct Reference {
  double x;
  double value;
};

constexpr Reference kLogGamma[] = {
    {0.5, 0.57236494292470008707},      {1.0, 0.0},
    {1.5, -0.12078223763524522235},     {2.0, 0.0},
    {5.0, 3.1780538303479456196},       {10.0, 12.801827480081469611},
    {100.0, 359.13420536957539878},     {0.001, 6.9071788853838536825},
    {0.1, 2.2527126517342059599},       {0.25, 1.2880225246980774574},
    {0.75, 0.20328095143129537148},     {0.9, 0.066376239734742971189},
    {1.1, -0.049872441259839724148},    {1.25, -0.098271836421813161464},
    {1.75, -0.084401121020485555958},   {1.9, -0.038984275923083330039},
    {2.1, 0.045437738544485135896},     {2.5, 0.28468287047291915963},
    {3.7, 1.4280723266653879219},       {7.5, 7.5343642367587329552},
    {33.3, 82.603723581654952928},      {1000.0, 5905.2204232091812118},
    {123456.789, 1323902.0187950631238}, {1e-8, 18.420680738180208905},
};

constexpr Reference kDigamma[] = {
    {0.001, -1000.5755719318103005}, {0.1, -10.423754940411076795}, {0.5, -1.9635100260214234794},
    {1.0, -0.57721566490153286061},  {1.5, 0.036489973978576520559}, {2.0, 0.42278433509846713939},
    {3.3, 1.0348224890596217491},    {5.9, 1.6878194259079581162},   {6.0, 1.7061176684318004727},
    {6.1, 1.7240879604285380723},    {10.0, 2.2517525890667211076},  {100.0, 4.6001618527380874002},
    {1e4, 9.2102903711428494036},
};

}  // namespace

TEST_CASE("log_gamma matches high-precision references") {
  for (const auto& r : kLogGamma) {
    CAPTURE(r.x);
    const double got = log_gamma(r.x);
    if (r.value == 0.0) {
      CHECK(std::abs(got) < 1e-15);
    } else {
      CHECK(std::abs(got - r.value) <= 1e-13 * std::abs(r.value));
    }
  }
}

TEST_CASE("log_gamma closed forms") {
  CHECK(log_gamma(1.0) == 0.0);
  CHECK(log_gamma(5.0) == doctest::Approx(3.1780538303479458).epsilon(1e-15));
  CHECK(log_gamma(0.5) == doctest::Approx(0.5723649429247001).epsilon(1e-15));
  CHECK(log_gamma(0.5) == doctest::Approx(0.5 * std::log(std::numbers::pi)).epsilon(1e-15));
}

TEST_CASE("log_gamma rejects non-positive and non-finite input") {
  CHECK_THROWS_AS(log_gamma(0.0), std::domain_error);
  CHECK_THROWS_AS(log_gamma(-1.5), std::domain_error);
  CHECK_THROWS_AS(log_gamma(std::numeric_limits<double>::infinity()), std::domain_error);
  CHECK_THROWS_AS(log_gamma(std::numeric_limits<double>::quiet_NaN()), std::domain_error);
  CHECK_THROWS_AS(digamma(0.0), std::domain_error);
  CHECK_THROWS_AS(digamma(-2.0), std::domain_error);
}

TEST_CASE("log_gamma recurrence holds on [0.1, 1e5]") {
  std::mt19937_64 gen(20240901);
  std::uniform_real_distribution<double> log_x(std::log(0.1), std::log(1e5));
  for (int i = 0; i < 20000; ++i) {
    const double x = std::exp(log_x(gen));
    const double lhs = log_gamma(x + 1.0);
    const double lg = log_gamma(x);
    const double rhs = lg + std::log(x);
    // Relative to the magnitude of the terms being combined.
    const double scale = std::max({std::abs(lhs), std::abs(lg), std::abs(std::log(x))});
    CAPTURE(x);
    REQUIRE(std::abs(lhs - rhs) <= 1e-12 * scale);
  }
}

TEST_CASE("digamma references and identities") {
  for (const auto& r : kDigamma) {
    CAPTURE(r.x);
    CHECK(std::abs(digamma(r.x) - r.value) <= 1e-11 * std::abs(r.value));
  }
  CHECK(digamma(1.0) == doctest::Approx(-0.5772156649015329).epsilon(1e-12));
  CHECK(digamma(2.0) == doctest::Approx(0.4227843350984671).epsilon(1e-12));

  std::mt19937_64 gen(7);
  std::uniform_real_distribution<double> u(0.01, 50.0);
  for (int i = 0; i < 2000; ++i) {
    const double x = u(gen);
    CAPTURE(x);
    CHECK(digamma(x + 1.0) - digamma(x) == doctest::Approx(1.0 / x).epsilon(1e-11));
  }
}

TEST_CASE("digamma matches a finite difference of log_gamma") {
  const double h = 1e-5;
  for (double x = 0.5; x <= 100.0; x += 0.37) {
    const double fd = (log_gamma(x + h) - log_gamma(x - h)) / (2.0 * h);
    CAPTURE(x);
    CHECK(std::abs(digamma(x) - fd) < 1e-5);
  }
}

TEST_CASE("transform examples") {
  CHECK(transform(0.5, TransformKind::logit) == 0.0);
  CHECK(transform(0.5, TransformKind::arcsine_sqrt) == doctest::Approx(0.7853981633974483).epsilon(1e-15));
  CHECK(transform(0.8, TransformKind::logit) == doctest::Approx(1.3862943611198906).epsilon(1e-14));
  CHECK(transform(0.3, TransformKind::identity) == 0.3);

  CHECK(log_jacobian(0.5, TransformKind::identity) == 0.0);
  CHECK(log_jacobian(0.5, TransformKind::logit) == doctest::Approx(1.3862943611198906).epsilon(1e-15));
  CHECK(std::abs(log_jacobian(0.5, TransformKind::arcsine_sqrt)) < 1e-15);
}

TEST_CASE("transform round trip and log-Jacobian") {
  for (TransformKind kind : {TransformKind::identity, TransformKind::logit, TransformKind::arcsine_sqrt}) {
    CAPTURE(to_string(kind));
    for (double ly = std::log(1e-6); ly <= std::log(1.0 - 1e-6); ly += 0.01) {
      for (double y : {std::exp(ly), 1.0 - std::exp(ly)}) {
        if (!(y >= 1e-6 && y <= 1.0 - 1e-6)) continue;
        CAPTURE(y);
        CHECK(std::abs(inverse_transform(transform(y, kind), kind) - y) <= 1e-12);
      }
    }
    const double h = 1e-6;
    for (double y = 0.01; y <= 0.99; y += 0.0049) {
      const double fd = (transform(y + h, kind) - transform(y - h, kind)) / (2.0 * h);
      CAPTURE(y);
      CHECK(std::abs(log_jacobian(y, kind) - std::log(fd)) < 1e-6);
    }
  }
}

TEST_CASE("transform names") {
  CHECK(to_string(TransformKind::identity) == "none");
  CHECK(to_string(TransformKind::logit) == "logit");
  CHECK(to_string(TransformKind::arcsine_sqrt) == "asin");
  CHECK(parse_transform("none") == TransformKind::identity);
  CHECK(parse_transform("asin") == TransformKind::arcsine_sqrt);
  CHECK_THROWS_AS(parse_transform("probit"), std::invalid_argument);
}

TEST_CASE("inverse_logit is stable at extreme arguments") {
  CHECK(inverse_logit(0.0) == 0.5);
  CHECK(inverse_logit(800.0) == 1.0);
  CHECK(inverse_logit(-700.0) > 0.0);
  CHECK(inverse_logit(-700.0) < 1e-300);
  CHECK(inverse_logit(0.2) == doctest::Approx(0.549833997312478).epsilon(1e-14));
}
