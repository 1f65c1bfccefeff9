#include "doctest.h"
TEST_CASE("placeholder_harness") { CHECK(true); }
