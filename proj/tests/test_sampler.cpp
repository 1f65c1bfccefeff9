#include "doctest.h"
TEST_CASE("placeholder_sampler") { CHECK(true); }
