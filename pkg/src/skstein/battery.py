"""Bounded test functions addressed by name in experiment configs.

Recognised names: ``tanh`` (``tanh(beta*x + h)``), ``sin``, ``cos``,
``sigmoid`` and ``indicator:t`` (``1{x <= t}``).
"""

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.special import expit

DEFAULT_BATTERY = ("tanh", "sin", "cos", "sigmoid", "indicator:0", "indicator:0.5")


@dataclass(frozen=True)
class TestFunction:
    name: str
    fn: Callable[[np.ndarray], np.ndarray] = field(repr=False)
    discontinuities: tuple = ()
    sup_norm: float = 1.0

    __test__ = False  # keep pytest from collecting this class

    def __call__(self, x):
        return self.fn(np.asarray(x, dtype=float))

    @property
    def smooth(self):
        return not self.discontinuities


def _indicator(t):
    return lambda x: (x <= t).astype(float)


def make_test_function(name, beta=0.0, h=0.0):
    """Build the named test function; ``beta`` and ``h`` parametrise ``tanh``."""
    if name == "tanh":
        return TestFunction("tanh", lambda x: np.tanh(beta * x + h))
    if name == "sin":
        return TestFunction("sin", np.sin)
    if name == "cos":
        return TestFunction("cos", np.cos)
    if name == "sigmoid":
        return TestFunction("sigmoid", expit)
    if name.startswith("indicator:"):
        try:
            t = float(name.split(":", 1)[1])
        except ValueError:
            raise ValueError(f"bad indicator threshold in {name!r}") from None
        return TestFunction(name, _indicator(t), discontinuities=(t,))
    raise ValueError(f"unknown test function {name!r}")


def make_battery(names, beta=0.0, h=0.0):
    return [make_test_function(n, beta, h) for n in names]
