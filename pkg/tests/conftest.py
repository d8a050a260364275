import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from visdist.representative import SynsetRepresentative, TernaryVector


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


def make_rep(values, synset_id="s", n_source_samples=1) -> SynsetRepresentative:
    return SynsetRepresentative.from_ternary(
        synset_id, TernaryVector.from_values(np.asarray(values, dtype=np.int8)),
        n_source_samples,
    )


def random_reps(rng, count, n_features, p_plus=0.25, p_minus=0.25, prefix="n"):
    """Seeded random representatives with sorted ids."""
    values = rng.choice(
        np.array([-1, 0, 1], dtype=np.int8),
        size=(count, n_features),
        p=[p_minus, 1.0 - p_plus - p_minus, p_plus],
    )
    return [
        make_rep(values[i], synset_id=f"{prefix}{i:06d}") for i in range(count)
    ]
