#include "doctest.h"
#include "support.hpp"

using namespace testsupport;

TEST_CASE("every majorizer is tight, dominating and tangent on random instances") {
    for (const BoundCheck& c : run_bound_suite(12, 20, 0x5eed)) {
        CAPTURE(c.name);
        CHECK(c.max_tightness <= 1e-9);
        CHECK(c.worst_domination <= 1e-10);
        CHECK(c.max_grad_rel < 1e-4);
    }
}
