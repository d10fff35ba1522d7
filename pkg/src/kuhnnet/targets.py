"""Built-in closed-form targets with known moduli (all vectorised over ``(m, d)`` batches)."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import InputError
from .modulus import Modulus, affine_jump_modulus, lipschitz_modulus

RIDGE_CENTER = 0.37


@dataclass(frozen=True)
class Target:
    name: str
    fn: Callable[[np.ndarray], np.ndarray]
    lipschitz: float
    jump: float = 0.0

    def __call__(self, x):
        x = np.asarray(x, dtype=np.float64)
        if x.ndim == 1:
            return float(self.fn(x[None, :])[0])
        return self.fn(x)

    def modulus(self, d: int) -> Modulus:
        if self.jump:
            return affine_jump_modulus(self.jump, self.lipschitz, d)
        return lipschitz_modulus(self.lipschitz, d)


def _linear(x):
    return x.mean(axis=1)


def _l1(x):
    return np.abs(x - 0.5).sum(axis=1)


def _min(x):
    return x.min(axis=1)


def _ridge(x):
    return np.abs(x[:, 0] - RIDGE_CENTER)


def _heaviside(x):
    return 0.5 * x[:, 0] + 0.1 * (x[:, 0] >= 0.5)


def get_target(name: str, d: int) -> Target:
    if name == "linear":
        return Target(name, _linear, 1.0 / d)
    if name == "l1-norm":
        return Target(name, _l1, 1.0)
    if name == "min-coords":
        return Target(name, _min, 1.0)
    if name == "ridge":
        return Target(name, _ridge, 1.0)
    if name == "heaviside-perturbed":
        return Target(name, _heaviside, 0.5, jump=0.1)
    raise InputError(f"unknown target {name!r}; choose from {', '.join(TARGET_NAMES)}")


TARGET_NAMES = ("linear", "l1-norm", "min-coords", "ridge", "heaviside-perturbed")
