"""Class labels for the three entanglement families and their convex combinations."""

from dataclasses import dataclass
from enum import Enum
from typing import Sequence, Tuple

import numpy as np

LABEL_TOLERANCE = 1e-9


class StateClass(Enum):
    """Entanglement families, in label-vector order."""
    PRODUCT = 0
    PAIRWISE = 1
    FULLY = 2

    @property
    def slug(self) -> str:
        return self.name.lower()


@dataclass(frozen=True)
class ClassLabel:
    """Convex weights over (product, pairwise, fully) entangled classes."""
    weights: Tuple[float, ...]

    def __post_init__(self):
        weights = tuple(float(w) for w in self.weights)
        if len(weights) != len(StateClass):
            raise ValueError(f"Class label needs {len(StateClass)} weights, got {len(weights)}")
        if any(w < 0.0 or w > 1.0 for w in weights) or abs(sum(weights) - 1.0) > LABEL_TOLERANCE:
            raise ValueError(f"Class label weights must be a convex combination, got {weights}")
        object.__setattr__(self, "weights", weights)

    @classmethod
    def one_hot(cls, state_class: StateClass) -> "ClassLabel":
        weights = [0.0] * len(StateClass)
        weights[state_class.value] = 1.0
        return cls(tuple(weights))

    @classmethod
    def parse(cls, text: str) -> "ClassLabel":
        """Parses `w1,w2,w3` or a class name such as `pairwise`."""
        text = text.strip()
        for state_class in StateClass:
            if text.lower() == state_class.slug:
                return cls.one_hot(state_class)
        try:
            return cls(tuple(float(part) for part in text.split(",")))
        except ValueError as e:
            raise ValueError(f"Invalid class label '{text}': {e}")

    def as_array(self) -> np.ndarray:
        return np.asarray(self.weights, dtype=np.float64)

    @property
    def is_one_hot(self) -> bool:
        return sorted(self.weights) == [0.0] * (len(self.weights) - 1) + [1.0]

    def describe(self) -> str:
        if self.is_one_hot:
            return StateClass(self.weights.index(1.0)).slug
        return ",".join(f"{w:g}" for w in self.weights)


def interpolate_label(a: ClassLabel, b: ClassLabel, weight: float) -> ClassLabel:
    """Returns (1 - weight)·a + weight·b for weight in [0, 1]."""
    if not 0.0 <= weight <= 1.0:
        raise ValueError(f"Interpolation weight must lie in [0, 1], got {weight}")
    mixed = (1.0 - weight) * a.as_array() + weight * b.as_array()
    # renormalize away rounding so the convexity check is exact
    mixed = np.clip(mixed, 0.0, 1.0)
    return ClassLabel(tuple(mixed / mixed.sum()))


def describe_label_row(row: Sequence[float]) -> str:
    """Human-readable name for a stored label vector (class name when one-hot)."""
    try:
        return ClassLabel(tuple(row)).describe()
    except ValueError:
        return ",".join(f"{w:g}" for w in row)
