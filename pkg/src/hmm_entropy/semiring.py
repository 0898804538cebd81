"""Commutative semirings used by the generic chain forward-backward.

Two instances are provided: the ordinary sum-product semiring over the
reals (``REAL``) and the entropy semiring over pairs ``(z, h)``
(``ENTROPY``).  Entropy-semiring elements are :class:`EsrValue` tuples;
the z-part carries probability mass and the h-part accumulates
``z * log z`` style terms, so that summing the lifted global kernel of a
normalized chain yields ``(1, sum p log p)``.
"""

import math
import operator
from dataclasses import dataclass
from functools import reduce
from typing import Any, Callable, Iterable, NamedTuple


@dataclass(frozen=True)
class Semiring:
    """All operations defining a commutative semiring.

    zero: additive identity (absorbing under ``times``)
    one: multiplicative identity
    plus: commutative, associative addition
    times: commutative, associative multiplication distributing over plus
    """

    name: str
    zero: Any
    one: Any
    plus: Callable[[Any, Any], Any]
    times: Callable[[Any, Any], Any]

    def sum(self, values: Iterable) -> Any:
        return reduce(self.plus, values, self.zero)

    def product(self, values: Iterable) -> Any:
        return reduce(self.times, values, self.one)


class EsrValue(NamedTuple):
    """Element of the entropy semiring."""

    z: float
    h: float


def esr_plus(a: EsrValue, b: EsrValue) -> EsrValue:
    return EsrValue(a.z + b.z, a.h + b.h)


def esr_times(a: EsrValue, b: EsrValue) -> EsrValue:
    return EsrValue(a.z * b.z, a.z * b.h + b.z * a.h)


def esr_lift(z: float) -> EsrValue:
    """Map a nonnegative weight ``z`` to ``(z, z log z)`` with ``0 log 0 = 0``."""
    if z < 0 or math.isnan(z):
        raise ValueError(f"esr_lift requires z >= 0, got {z!r}")
    if z == 0:
        return ESR_ZERO
    return EsrValue(float(z), float(z) * math.log(z))


def esr_fold_product(values: Iterable[EsrValue]) -> EsrValue:
    """Left fold of :func:`esr_times`; the empty product is ``(1, 0)``.

    For elements of the form ``(z_i, z_i h_i)`` the result is
    ``(prod z_i, prod z_i * sum h_i)``.
    """
    return reduce(esr_times, values, ESR_ONE)


ESR_ZERO = EsrValue(0.0, 0.0)
ESR_ONE = EsrValue(1.0, 0.0)

REAL = Semiring("real", 0.0, 1.0, operator.add, operator.mul)
ENTROPY = Semiring("entropy", ESR_ZERO, ESR_ONE, esr_plus, esr_times)
