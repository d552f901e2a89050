from __future__ import annotations

import numpy as np
import pytest

from zsac.model import ClassSet, LabeledClass


@pytest.fixture
def two_unit_classes() -> ClassSet:
    """Classes 'a' and 'b' on the 2-D axis unit vectors."""
    return ClassSet.from_items(
        [("a", "cat", np.array([1.0, 0.0])), ("b", "cat", np.array([0.0, 1.0]))]
    )


def random_class_set(rng: np.random.Generator, n_classes: int, d_y: int) -> ClassSet:
    return ClassSet(
        [
            LabeledClass(i, f"c{i}", "cat", rng.standard_normal(d_y))
            for i in range(n_classes)
        ]
    )
