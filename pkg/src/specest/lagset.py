"""Rectangular lag index sets and conjugate-symmetric coefficient fields.

A 2-D stationary random field is summarized on the rectangle of lags
``Lambda = {(k1, k2) : |k1| <= n1, |k2| <= n2}``.  Both the covariance data
and the dual variable of the estimation problem live on Lambda as complex
multisequences with the symmetry ``c(-k) = conj(c(k))`` (so the associated
trigonometric polynomial is real).  This module provides the index set, the
symmetric multisequence container, the lexicographic vectorization used by
the structured Hessian, the real inner product, and CSV serialization.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Iterator, Mapping, Tuple

import numpy as np

# A lag is an ordinary (k1, k2) integer pair.
LagIndex = Tuple[int, int]

#: Default absolute tolerance for conjugate-symmetry validation of O(1) data.
SYMMETRY_TOL = 1e-12


@dataclass(frozen=True)
class IndexSet:
    """Rectangle of lags ``|k1| <= n1``, ``|k2| <= n2``."""

    n1: int
    n2: int

    def __post_init__(self):
        if self.n1 < 1 or self.n2 < 1:
            raise ValueError(f"n1 and n2 must be positive, got ({self.n1}, {self.n2})")

    @property
    def shape(self) -> Tuple[int, int]:
        return (2 * self.n1 + 1, 2 * self.n2 + 1)

    @property
    def size(self) -> int:
        return (2 * self.n1 + 1) * (2 * self.n2 + 1)

    def contains(self, k: LagIndex) -> bool:
        return abs(k[0]) <= self.n1 and abs(k[1]) <= self.n2

    def lags(self) -> Iterator[LagIndex]:
        """Iterate over Lambda in lexicographic (vectorization) order."""
        for k1 in range(-self.n1, self.n1 + 1):
            for k2 in range(-self.n2, self.n2 + 1):
                yield (k1, k2)


def vec_position(k: LagIndex, s: IndexSet) -> int:
    """1-based position of lag ``k`` in the lexicographic coefficient vector.

    The coefficient of lag (k1, k2) occupies entry
    ``(2*n2 + 1)*(k1 + n1) + k2 + n2 + 1``.
    """
    if not s.contains(k):
        raise ValueError(f"lag {k} outside index set with (n1, n2)=({s.n1}, {s.n2})")
    return (2 * s.n2 + 1) * (k[0] + s.n1) + k[1] + s.n2 + 1


class SymmetricMultisequence:
    """Complex coefficients on a lag rectangle with ``c(-k) = conj(c(k))``.

    All of Lambda is stored (both half planes); constructors validate the
    conjugate symmetry to a tolerance and then enforce it exactly, so every
    instance satisfies ``values[::-1, ::-1] == conj(values)`` bit for bit and
    the lag-0 entry is real.  Instances are immutable.
    """

    def __init__(self, index_set: IndexSet, values, *, tol: float = SYMMETRY_TOL,
                 validate: bool = True):
        v = np.asarray(values, dtype=complex)
        if v.shape != index_set.shape:
            raise ValueError(
                f"values shape {v.shape} does not match index set shape {index_set.shape}"
            )
        if validate:
            asym = np.max(np.abs(v - np.conj(v[::-1, ::-1])))
            scale = max(1.0, float(np.max(np.abs(v))))
            if asym > tol * scale:
                raise ValueError(
                    f"conjugate symmetry violated by {asym:.3e} "
                    f"(tolerance {tol:.1e} at scale {scale:.3g})"
                )
        # Exact symmetrization removes residual rounding noise so downstream
        # identities (real inner products, real polynomials) hold tightly.
        v = 0.5 * (v + np.conj(v[::-1, ::-1]))
        v[index_set.n1, index_set.n2] = v[index_set.n1, index_set.n2].real
        v.flags.writeable = False
        self._index_set = index_set
        self._values = v

    @property
    def index_set(self) -> IndexSet:
        return self._index_set

    @property
    def values(self) -> np.ndarray:
        """Read-only array of shape (2*n1+1, 2*n2+1); entry [k1+n1, k2+n2]."""
        return self._values

    @classmethod
    def zeros(cls, index_set: IndexSet) -> "SymmetricMultisequence":
        return cls(index_set, np.zeros(index_set.shape, dtype=complex), validate=False)

    @classmethod
    def from_entries(cls, index_set: IndexSet,
                     entries: Mapping[LagIndex, complex]) -> "SymmetricMultisequence":
        """Build from a sparse mapping; unspecified mirror lags are filled by
        conjugation."""
        v = np.zeros(index_set.shape, dtype=complex)
        for k, val in entries.items():
            if not index_set.contains(k):
                raise ValueError(f"lag {k} outside index set")
            v[k[0] + index_set.n1, k[1] + index_set.n2] = val
        for k, val in entries.items():
            mk = (-k[0], -k[1])
            if mk not in entries:
                v[mk[0] + index_set.n1, mk[1] + index_set.n2] = np.conj(val)
        return cls(index_set, v)

    def value(self, k: LagIndex) -> complex:
        if not self._index_set.contains(k):
            raise ValueError(f"lag {k} outside index set")
        return complex(self._values[k[0] + self._index_set.n1,
                                    k[1] + self._index_set.n2])

    def conjugated(self) -> "SymmetricMultisequence":
        """Elementwise conjugate, which equals the lag reversal c(k) -> c(-k)."""
        return SymmetricMultisequence(self._index_set, np.conj(self._values),
                                      validate=False)

    def add_scaled(self, other: "SymmetricMultisequence",
                   t: float) -> "SymmetricMultisequence":
        """Return self + t*other for a real scale t (symmetry is preserved)."""
        if other.index_set != self._index_set:
            raise ValueError("index sets differ")
        return SymmetricMultisequence(
            self._index_set, self._values + float(t) * other._values, validate=False
        )

    def norm(self) -> float:
        return float(np.linalg.norm(self._values))

    def __repr__(self) -> str:
        s = self._index_set
        return f"SymmetricMultisequence(n1={s.n1}, n2={s.n2})"


def vectorize(q: SymmetricMultisequence) -> np.ndarray:
    """Lexicographic coefficient vector of length (2*n1+1)*(2*n2+1)."""
    return q.values.ravel()


def devectorize(v, s: IndexSet, *, tol: float = SYMMETRY_TOL) -> SymmetricMultisequence:
    """Inverse of :func:`vectorize`; validates conjugate symmetry."""
    v = np.asarray(v, dtype=complex).ravel()
    if v.size != s.size:
        raise ValueError(f"vector length {v.size} does not match |Lambda|={s.size}")
    return SymmetricMultisequence(s, v.reshape(s.shape), tol=tol)


def real_inner_product(q: SymmetricMultisequence, sigma: SymmetricMultisequence,
                       *, tol: float = SYMMETRY_TOL) -> float:
    """Duality pairing ``sum_k q_k * conj(sigma_k)``, real for symmetric data.

    The imaginary residue of the complex sum is asserted small and discarded.
    """
    if q.index_set != sigma.index_set:
        raise ValueError("index sets differ")
    total = np.vdot(sigma.values, q.values)  # sum conj(sigma) * q
    scale = max(1.0, float(np.sum(np.abs(q.values) * np.abs(sigma.values))))
    if abs(total.imag) > tol * scale:
        raise ValueError(
            f"inner product has non-negligible imaginary part {total.imag:.3e}"
        )
    return float(total.real)


def write_coefficients_csv(path, q: SymmetricMultisequence) -> None:
    """Write ``k1,k2,re,im`` rows, one per lag of Lambda in lexicographic order."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["k1", "k2", "re", "im"])
        for k1, k2 in q.index_set.lags():
            c = q.values[k1 + q.index_set.n1, k2 + q.index_set.n2]
            w.writerow([k1, k2, f"{c.real:.17g}", f"{c.imag:.17g}"])


def read_coefficients_csv(path, *, tol: float = SYMMETRY_TOL) -> SymmetricMultisequence:
    """Read a coefficient CSV, verifying completeness of Lambda and symmetry."""
    rows = {}
    with open(path, newline="") as fh:
        r = csv.reader(fh)
        header = next(r, None)
        if header is None or [h.strip() for h in header] != ["k1", "k2", "re", "im"]:
            raise ValueError(f"{path}: expected header 'k1,k2,re,im'")
        for line in r:
            if not line:
                continue
            k1, k2 = int(line[0]), int(line[1])
            if (k1, k2) in rows:
                raise ValueError(f"{path}: duplicate lag ({k1}, {k2})")
            rows[(k1, k2)] = complex(float(line[2]), float(line[3]))
    if not rows:
        raise ValueError(f"{path}: no coefficient rows")
    n1 = max(abs(k[0]) for k in rows)
    n2 = max(abs(k[1]) for k in rows)
    s = IndexSet(n1, n2)
    missing = [k for k in s.lags() if k not in rows]
    if missing:
        raise ValueError(f"{path}: incomplete index set, missing lags {missing[:4]}...")
    v = np.zeros(s.shape, dtype=complex)
    for (k1, k2), c in rows.items():
        v[k1 + n1, k2 + n2] = c
    return SymmetricMultisequence(s, v, tol=tol)
