"""Scalar nonlinearities f applied to density operators through the spectrum.

Two built-in families plus user callables:

* ``power(q)``        -- f(x) = x^q
* ``qfamily(q)``      -- f(x) = x^q - 2 x^(q-1); its fixed-point equation
                         f(x) - x + 2 = 0 has roots exactly {1, 2} for every q
* ``custom(fn, ...)`` -- any vectorized real scalar function

Non-integer powers reject negative arguments unless the even extension
f(x) = f(|x|) is switched on explicitly.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import DomainError

_INT_TOL = 1e-12


def _is_int(q: float) -> bool:
    return abs(q - round(q)) < _INT_TOL


def _checked_power(x: np.ndarray, q: float, even: bool) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if even:
        x = np.abs(x)
    if _is_int(q):
        qi = int(round(q))
        if qi < 0 and np.any(x == 0.0):
            raise DomainError(f"x^{qi} undefined at eigenvalue 0")
        return x.astype(float) ** qi
    if np.any(x < 0.0):
        bad = float(np.min(x))
        raise DomainError(
            f"x^{q} undefined at negative eigenvalue {bad:.6g}; "
            "enable the even extension to evaluate f(|x|)"
        )
    if q < 0 and np.any(x == 0.0):
        raise DomainError(f"x^{q} undefined at eigenvalue 0")
    return x ** q


@dataclass(frozen=True)
class Nonlinearity:
    """A real scalar function with a label, evaluated on eigenvalue vectors."""

    label: str
    fn: Callable[[np.ndarray], np.ndarray]
    q: float | None = None
    even: bool = False

    def __call__(self, x) -> np.ndarray:
        vals = np.asarray(self.fn(np.asarray(x, dtype=float)))
        if not np.all(np.isfinite(vals)):
            raise DomainError(f"nonlinearity {self.label!r} returned non-finite values")
        return vals

    @classmethod
    def power(cls, q: float, even: bool = False) -> "Nonlinearity":
        label = f"x^{q:g}" + ("|even" if even else "")
        return cls(label=label, fn=lambda x: _checked_power(x, q, even), q=float(q), even=even)

    @classmethod
    def qfamily(cls, q: float, even: bool = False) -> "Nonlinearity":
        """f(x) = x^q - 2 x^(q-1); reduces to the linear shift x - 2 at q = 1."""
        qf = float(q)

        def fn(x: np.ndarray) -> np.ndarray:
            return _checked_power(x, qf, even) - 2.0 * _checked_power(x, qf - 1.0, even)

        label = f"x^{qf:g}-2x^{qf - 1:g}" + ("|even" if even else "")
        return cls(label=label, fn=fn, q=qf, even=even)

    @classmethod
    def custom(cls, fn: Callable[[np.ndarray], np.ndarray], label: str = "custom",
               q: float | None = None, even: bool = False) -> "Nonlinearity":
        if even:
            return cls(label=label + "|even", fn=lambda x: fn(np.abs(x)), q=q, even=True)
        return cls(label=label, fn=fn, q=q, even=False)
