#pragma once

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <sstream>
#include <string>

// |actual - expected| <= k * sigma, with a readable failure message.
#define REQUIRE_WITHIN_SIGMA(actual, expected, sigma, k)                                                   \
    do {                                                                                                  \
        const double a_ = (actual);                                                                       \
        const double e_ = (expected);                                                                     \
        const double s_ = (sigma);                                                                        \
        INFO("actual " << a_ << " expected " << e_ << " sigma " << s_ << " z " << (a_ - e_) / s_);         \
        REQUIRE(std::abs(a_ - e_) <= (k) * s_);                                                           \
    } while (false)
