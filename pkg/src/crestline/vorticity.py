"""Vorticity functions omega(p) of the stream-function value p.

Every built-in kind is a polynomial in p, so omega, its derivative and its
primitive Omega(tau) = int_0^tau omega are available in closed form.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from numpy.polynomial import Polynomial

KINDS = ("zero", "constant", "linear", "polynomial")


@dataclass(frozen=True)
class VorticityModel:
    """Polynomial vorticity family.

    ``coefficients`` is the parameter vector; its meaning depends on ``kind``:

    * ``zero``: ignored, omega = 0
    * ``constant``: ``[b]``, omega = b
    * ``linear``: ``[gamma]``, omega = gamma * p
    * ``polynomial``: ``[c0, c1, ...]``, omega = sum c_i p**i
    """

    kind: str = "zero"
    coefficients: tuple[float, ...] = ()
    _poly: Polynomial = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown vorticity kind {self.kind!r}; expected one of {KINDS}")
        coeffs = tuple(float(c) for c in self.coefficients)
        if not all(np.isfinite(coeffs)):
            raise ValueError("vorticity coefficients must be finite")
        object.__setattr__(self, "coefficients", coeffs)

        if self.kind == "zero":
            poly = Polynomial([0.0])
        elif self.kind == "constant":
            if len(coeffs) != 1:
                raise ValueError("constant vorticity takes exactly one coefficient")
            poly = Polynomial([coeffs[0]])
        elif self.kind == "linear":
            if len(coeffs) != 1:
                raise ValueError("linear vorticity takes exactly one coefficient")
            poly = Polynomial([0.0, coeffs[0]])
        else:
            if len(coeffs) == 0:
                raise ValueError("polynomial vorticity needs at least one coefficient")
            poly = Polynomial(coeffs)
        object.__setattr__(self, "_poly", poly)
        # plain tuples keep scalar evaluation cheap inside the RK4 loops
        object.__setattr__(self, "_omega_c", tuple(poly.coef))
        object.__setattr__(self, "_omega_prime_c", tuple(poly.deriv().coef))
        object.__setattr__(self, "_primitive_c", tuple(poly.integ(lbnd=0.0).coef))

    @classmethod
    def from_dict(cls, data: dict) -> "VorticityModel":
        return cls(kind=data.get("kind", "zero"), coefficients=tuple(data.get("coefficients", ())))

    def to_dict(self) -> dict:
        return {"kind": self.kind, "coefficients": list(self.coefficients)}

    @property
    def omega_poly(self) -> Polynomial:
        return self._poly

    @property
    def primitive_poly(self) -> Polynomial:
        # integ(lbnd=0) fixes the constant so that Omega(0) = 0
        return self._poly.integ(lbnd=0.0)

    def omega(self, p):
        return _horner(self._omega_c, p)

    def omega_prime(self, p):
        return _horner(self._omega_prime_c, p)

    def primitive(self, tau):
        return _horner(self._primitive_c, tau)


def _horner(coeffs, x):
    acc = coeffs[-1] * np.ones_like(x) if isinstance(x, np.ndarray) else coeffs[-1]
    for c in coeffs[-2::-1]:
        acc = acc * x + c
    return acc


def evaluate(model: VorticityModel, p):
    """Return ``(omega(p), omega'(p))``."""
    return model.omega(p), model.omega_prime(p)


def primitive(model: VorticityModel, tau):
    """Closed-form Omega(tau) = int_0^tau omega(t) dt."""
    return model.primitive(tau)


def zero() -> VorticityModel:
    return VorticityModel("zero")


def constant(b: float) -> VorticityModel:
    return VorticityModel("constant", (b,))


def linear(gamma: float) -> VorticityModel:
    return VorticityModel("linear", (gamma,))


def polynomial(coefficients: Sequence[float]) -> VorticityModel:
    return VorticityModel("polynomial", tuple(coefficients))
