import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from interlock.graph import graph_from_edges


@pytest.fixture(scope="session")
def warm_kernels():
    """Force numba compilation outside of any timed section."""
    from interlock import metrics
    pg = graph_from_edges(4, [(0, 1), (1, 2), (2, 3)])
    metrics.betweenness(pg)
    metrics.harmonic_closeness(pg)
    metrics.clustering(pg)
    from interlock.graph import components
    components(pg)
    return True


def make_graph(n, edges, genders=None, ages=None, countries=None):
    return graph_from_edges(n, edges, genders=genders, ages=ages,
                            countries=countries)


@pytest.fixture
def rng():
    return np.random.default_rng(20260810)
