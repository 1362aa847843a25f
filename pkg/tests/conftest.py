import numpy as np
import pytest

from treedesign.topology import NodeKind, build_tree, tree22

LEAF, RELAY, FC = NodeKind.LEAF, NodeKind.RELAY, NodeKind.FC

# Three branches of different depth hanging off the FC (node 17).  Nodes 0
# and 6 are two-level relay stacks, 13 is a single relay over three leaves.
DEEP_TREE_SPECS = [
    (RELAY, 17, 1),   # 0
    (RELAY, 0, 1),    # 1
    (LEAF, 1, 1, 2),  # 2
    (LEAF, 0, 1, 2),  # 3
    (LEAF, 0, 1, 2),  # 4
    (LEAF, 1, 1, 2),  # 5
    (RELAY, 17, 1),   # 6
    (RELAY, 6, 1),    # 7
    (LEAF, 7, 1, 2),  # 8
    (LEAF, 6, 1, 2),  # 9
    (LEAF, 6, 1, 2),  # 10
    (LEAF, 7, 1, 2),  # 11
    (LEAF, 7, 1, 2),  # 12
    (RELAY, 17, 1),   # 13
    (LEAF, 13, 1, 2),  # 14
    (LEAF, 13, 1, 2),  # 15
    (LEAF, 13, 1, 2),  # 16
    (FC, None),       # 17
]


@pytest.fixture
def deep_tree():
    return build_tree(DEEP_TREE_SPECS)


@pytest.fixture
def two_by_two():
    return tree22(1, 1, obs_size=2)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


_ACCEPTANCE = pytest.StashKey[list]()


@pytest.fixture(scope="session")
def acceptance_log(request):
    """Collects one ``(criterion, passed, detail)`` line per acceptance check."""
    return request.config.stash.setdefault(_ACCEPTANCE, [])


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_ACCEPTANCE, [])
    if not lines:
        return
    terminalreporter.section("acceptance criteria")
    for name, ok, detail in sorted(lines):
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {name}: {detail}")
