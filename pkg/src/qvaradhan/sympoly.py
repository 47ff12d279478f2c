"""Decomposition of polynomials into powers of linear forms.

A monomial ``x_1^a_1 ... x_q^a_q`` of degree ``p`` is polarized over ``p``
slots::

    y_1 ... y_p = 1/p! * sum_{eps in {0,1}^p, eps != 0} (-1)^(p-|eps|) (eps . y)^p

with slot ``s`` carrying the variable assigned to it, so every linear form
has non-negative integer coefficients counting slots per variable. Terms
are then merged on canonical directions. Coefficients are exact
``Fraction`` values throughout.
"""
from __future__ import annotations

import itertools
import math
from collections import Counter, defaultdict
from dataclasses import dataclass
from fractions import Fraction
from functools import reduce
from typing import Iterable, Sequence

import numpy as np


@dataclass(frozen=True)
class Term:
    alpha: Fraction
    p: int
    zeta: tuple  # of Fraction

    def __call__(self, u) -> Fraction | float:
        y = sum(z * x for z, x in zip(self.zeta, u))
        return self.alpha * y**self.p


@dataclass(frozen=True)
class PowerDecomposition:
    terms: tuple

    @property
    def nvars(self) -> int:
        return len(self.terms[0].zeta) if self.terms else 0

    @property
    def M(self) -> int:
        return len(self.terms)

    def __call__(self, u):
        return evaluate_decomposition(self, u)

    def to_json(self) -> dict:
        return {
            "terms": [
                {
                    "alpha": [t.alpha.numerator, t.alpha.denominator],
                    "p": t.p,
                    "zeta": [[z.numerator, z.denominator] for z in t.zeta],
                }
                for t in self.terms
            ]
        }

    @classmethod
    def from_json(cls, obj: dict) -> "PowerDecomposition":
        try:
            terms = []
            for i, t in enumerate(obj["terms"]):
                alpha = Fraction(*t["alpha"])
                zeta = tuple(Fraction(*z) for z in t["zeta"])
                p = int(t["p"])
                if p < 1:
                    raise ValueError(f"terms[{i}].p must be positive")
                terms.append(Term(alpha, p, zeta))
        except (KeyError, TypeError) as exc:
            raise ValueError(f"malformed decomposition JSON: {exc!r}") from exc
        return cls(tuple(terms))


def canonical_direction(zeta: Sequence) -> tuple[tuple, Fraction]:
    """Split ``zeta = scale * primitive`` with ``primitive`` integer, coprime,
    first non-zero entry positive."""
    zeta = [Fraction(z) for z in zeta]
    if not any(zeta):
        raise ValueError("zero linear form")
    den = reduce(math.lcm, (z.denominator for z in zeta), 1)
    ints = [int(z * den) for z in zeta]
    g = reduce(math.gcd, (abs(i) for i in ints if i), 0)
    first = next(i for i in ints if i)
    sign = 1 if first > 0 else -1
    prim = tuple(Fraction(sign * i // g) for i in ints)
    return prim, Fraction(sign * g, den)


def merge_terms(terms: Iterable[Term]) -> PowerDecomposition:
    """Collect terms sharing a canonical direction and power; drop zeros.

    Output is sorted by (power, direction) so it does not depend on input order.
    """
    acc: dict = defaultdict(Fraction)
    for t in terms:
        prim, scale = canonical_direction(t.zeta)
        acc[(t.p, prim)] += t.alpha * scale**t.p
    out = [Term(a, p, z) for (p, z), a in sorted(acc.items(), key=lambda kv: (kv[0][0], kv[0][1])) if a != 0]
    return PowerDecomposition(tuple(out))


def polarize_monomial(exponents: Sequence[int]) -> PowerDecomposition:
    exponents = [int(a) for a in exponents]
    if any(a < 0 for a in exponents):
        raise ValueError("exponents must be non-negative")
    p = sum(exponents)
    if p == 0:
        raise ValueError("degree-0 monomial: constants need no decomposition")
    q = len(exponents)
    slots = [j for j, a in enumerate(exponents) for _ in range(a)]
    norm = Fraction(1, math.factorial(p))
    # subsets of slots only matter through their per-variable counts
    counts: Counter = Counter()
    for eps in itertools.product((0, 1), repeat=p):
        k = sum(eps)
        if k == 0:
            continue
        zeta = [0] * q
        for s, e in zip(slots, eps):
            zeta[s] += e
        counts[(tuple(zeta), k)] += 1
    terms = []
    for (zeta, k), mult in counts.items():
        sign = -1 if (p - k) % 2 else 1
        terms.append(Term(norm * sign * mult, p, tuple(Fraction(z) for z in zeta)))
    return merge_terms(terms)


def decompose_symmetric(poly: Sequence[tuple[Sequence[int], object]]) -> PowerDecomposition:
    """Decompose ``sum coef * x^exponents``; coefficients may be ints, Fractions
    or ``(num, den)`` pairs."""
    terms = []
    nvars = None
    for exps, coef in poly:
        if nvars is None:
            nvars = len(exps)
        elif len(exps) != nvars:
            raise ValueError("all monomials need the same number of variables")
        coef = Fraction(*coef) if isinstance(coef, (tuple, list)) else Fraction(coef)
        if coef == 0:
            continue
        for t in polarize_monomial(exps).terms:
            terms.append(Term(coef * t.alpha, t.p, t.zeta))
    if nvars is None:
        raise ValueError("empty polynomial")
    dec = merge_terms(terms)
    if not dec.terms:
        raise ValueError("polynomial is identically zero after collecting terms")
    return dec


def evaluate_decomposition(d: PowerDecomposition, u):
    """``sum alpha_r (zeta_r . u)^p_r``.

    Exact when ``u`` holds ``Fraction`` or ``int`` values; otherwise floats.
    ``u`` may carry trailing axes (shape ``(q, ...)``) for batch evaluation.
    """
    if isinstance(u, (list, tuple)) and all(isinstance(x, (int, Fraction)) for x in u):
        if len(u) != d.nvars:
            raise ValueError(f"expected {d.nvars} values, got {len(u)}")
        return sum((t(u) for t in d.terms), Fraction(0))
    u = np.asarray(u, dtype=float)
    if u.shape[0] != d.nvars:
        raise ValueError(f"expected leading axis of length {d.nvars}, got {u.shape}")
    out = np.zeros(u.shape[1:])
    for t in d.terms:
        y = np.tensordot(np.array([float(z) for z in t.zeta]), u, axes=1)
        out = out + float(t.alpha) * y**t.p
    return out if out.ndim else float(out)


def monomial_value(exponents: Sequence[int], u) -> Fraction:
    return math.prod((Fraction(x) ** a for x, a in zip(u, exponents)), start=Fraction(1))


def from_rows(alpha: Sequence, powers: Sequence[int] | int, zeta_rows: Sequence[Sequence]) -> PowerDecomposition:
    """Build a decomposition from explicit coefficient / power / direction rows."""
    if isinstance(powers, int):
        powers = [powers] * len(alpha)
    terms = [Term(Fraction(a), int(p), tuple(Fraction(z) for z in row)) for a, p, row in zip(alpha, powers, zeta_rows)]
    return PowerDecomposition(tuple(terms))


# Hand-built decompositions used as golden fixtures.
PRODUCT_2 = from_rows([Fraction(1, 4), Fraction(-1, 4)], 2, [[1, 1], [1, -1]])
PRODUCT_3 = from_rows(
    [Fraction(1, 24), Fraction(-1, 24), Fraction(-1, 24), Fraction(1, 24)],
    3,
    [[1, 1, 1], [1, 1, -1], [1, -1, 1], [1, -1, -1]],
)
# 34[(x+y)^6 - (x-y)^6] - (2x+y)^6 + (2x-y)^6 - (x+2y)^6 + (x-2y)^6 = 720 x^3 y^3
CUBE_PRODUCT_2 = from_rows(
    [Fraction(c, 720) for c in (34, -34, -1, 1, -1, 1)],
    6,
    [[1, 1], [1, -1], [2, 1], [2, -1], [1, 2], [1, -2]],
)
