"""Fair division of indivisible goods when the allocator has preferences too."""

from .model import Allocation, Instance, classify, load_instance, parse_instance, random_instance
from .fairness import (
    allocator_efficiency,
    check,
    check_doubly,
    check_ef_c,
    check_multi_fair,
    check_prop_c,
)
from .doubly import (
    solve_bivalued_prop2,
    solve_doubly_prop_log,
    solve_identical_allocator_ef1,
    solve_two_agent_doubly_ef1,
)
from .maxeff import (
    build_gadget,
    maximize_binary_ef_dp,
    maximize_binary_prop_lp,
    maximize_round_robin,
    maximize_two_agent_ef,
)
from .oracle import enumerate_best, exists_multi_fair, search_counterexamples

__version__ = "0.1.0"
