import numpy as np
import pytest

from gossipeig import model as gm, oja, orth
from gossipeig.rng import SplitMix64


@pytest.fixture(scope="session", autouse=True)
def warm_kernels():
    """Trigger JIT compilation of every kernel once, outside any timed test."""
    m = gm.population_model(4)
    rng = SplitMix64(0)
    q, _ = oja.run_asynch_oja(m, oja.OjaSchedule(k=2, eta=0.01, t_oja=8, t_orth=0), rng)
    orth.run_orth_protocol(q, m, 8, rng)
    orth.run_averaging(m, np.arange(4.0), 8, rng, record_sums=True)
    from gossipeig.linalg import sym_eigen

    sym_eigen(np.eye(3))
