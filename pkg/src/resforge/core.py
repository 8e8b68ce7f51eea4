"""Structures, admissible sets and the small value types shared by every module.

A structure is a refractive index that is piecewise constant on ``[0, L]`` and
equal to one outside.  Breakpoints are stored as exact endpoints so that long
stacks do not accumulate width round-off.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np


class ResforgeError(Exception):
    """Base class for every domain error raised by the package."""


class StructureError(ResforgeError):
    def __init__(self, message: str, index: int | None = None):
        super().__init__(message if index is None else f"{message} (cell {index})")
        self.index = index


class DomainError(ResforgeError):
    """An argument lies outside the region where a routine is valid."""


class InapplicableError(ResforgeError):
    """A check or formula whose hypotheses are not met by the input."""


def _frozen(a) -> np.ndarray:
    arr = np.array(a, dtype=float)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class Structure:
    """Piecewise-constant refractive index on ``[0, L]``.

    ``edges`` holds the ``M + 1`` breakpoints and ``n`` the ``M`` cell values.
    The exterior index is fixed at one.
    """

    edges: np.ndarray
    n: np.ndarray

    def __post_init__(self):
        edges = _frozen(self.edges)
        n = _frozen(self.n)
        object.__setattr__(self, "edges", edges)
        object.__setattr__(self, "n", n)
        if edges.ndim != 1 or n.ndim != 1 or len(edges) != len(n) + 1:
            raise StructureError("edges must have exactly one more entry than n")
        if len(n) == 0:
            raise StructureError("structure needs at least one cell")
        if edges[0] != 0.0:
            raise StructureError("first cell must start at x = 0", 0)
        if not np.all(np.isfinite(edges)):
            raise StructureError("non-finite breakpoint")
        widths = np.diff(edges)
        bad = np.flatnonzero(~(widths > 0))
        if bad.size:
            raise StructureError("cell width must be positive", int(bad[0]))
        bad = np.flatnonzero(~(np.isfinite(n) & (n > 0)))
        if bad.size:
            raise StructureError("refractive index must be finite and positive", int(bad[0]))

    @classmethod
    def from_cells(cls, cells: Iterable[Sequence[float]]) -> "Structure":
        """Build from ``(x_lo, x_hi, n)`` triples, checking that they tile ``[0, L]``."""
        cells = [tuple(map(float, c)) for c in cells]
        if not cells:
            raise StructureError("empty cell list")
        edges = [cells[0][0]]
        for k, (lo, hi, _) in enumerate(cells):
            if lo != edges[-1]:
                kind = "gap" if lo > edges[-1] else "overlap"
                raise StructureError(f"{kind} before cell", k)
            if not hi > lo:
                raise StructureError("cell width must be positive", k)
            edges.append(hi)
        return cls(np.array(edges), np.array([c[2] for c in cells]))

    @classmethod
    def uniform_grid(cls, values: Sequence[float], L: float = 1.0) -> "Structure":
        """Equal-width cells on ``[0, L]`` with the given values."""
        values = np.asarray(values, dtype=float)
        edges = np.linspace(0.0, L, len(values) + 1)
        edges[-1] = L
        return cls(edges, values)

    @classmethod
    def slab(cls, n0: float, L: float = 1.0) -> "Structure":
        return cls(np.array([0.0, L]), np.array([n0]))

    @property
    def L(self) -> float:
        return float(self.edges[-1])

    @property
    def widths(self) -> np.ndarray:
        return np.diff(self.edges)

    @property
    def cells(self) -> list[tuple[float, float, float]]:
        return [(float(a), float(b), float(v)) for a, b, v in zip(self.edges[:-1], self.edges[1:], self.n)]

    def __len__(self) -> int:
        return len(self.n)

    def with_values(self, n: Sequence[float]) -> "Structure":
        return Structure(self.edges, np.asarray(n, dtype=float))

    def cell_index(self, x) -> np.ndarray:
        """Index of the cell containing each ``x``; breakpoints go to the right cell."""
        idx = np.searchsorted(self.edges, x, side="right") - 1
        return np.clip(idx, 0, len(self.n) - 1)

    def value_at(self, x):
        return self.n[self.cell_index(x)]

    def reversed(self) -> "Structure":
        L = self.L
        edges = L - self.edges[::-1]
        edges[0] = 0.0
        edges[-1] = L
        return Structure(edges, self.n[::-1])

    def __eq__(self, other) -> bool:
        if not isinstance(other, Structure):
            return NotImplemented
        return np.array_equal(self.edges, other.edges) and np.array_equal(self.n, other.n)

    def __hash__(self):
        return hash((self.edges.tobytes(), self.n.tobytes()))


@dataclass(frozen=True)
class AdmissibleSet:
    L: float
    n_minus: float
    n_plus: float
    rho: float = float("inf")
    symmetric: bool = False

    def __post_init__(self):
        if not self.L > 0:
            raise DomainError("L must be positive")
        if not 0 < self.n_minus < self.n_plus < float("inf"):
            raise DomainError("need 0 < n_minus < n_plus < inf")
        if not self.rho > 0:
            raise DomainError("rho must be positive")

    @property
    def n_mid(self) -> float:
        return 0.5 * (self.n_minus + self.n_plus)


@dataclass(frozen=True)
class SearchRect:
    """Axis-aligned rectangle in the lower half of the frequency plane."""

    re_min: float
    re_max: float
    im_min: float
    im_max: float

    def __post_init__(self):
        if not self.re_min < self.re_max:
            raise DomainError("empty rectangle: re_min >= re_max")
        if not self.im_min < self.im_max:
            raise DomainError("empty rectangle: im_min >= im_max")
        if self.im_max > 0:
            raise DomainError("rectangle must lie in Im(omega) <= 0")

    def contains(self, w: complex, pad: float = 0.0) -> bool:
        return (self.re_min - pad <= w.real <= self.re_max + pad
                and self.im_min - pad <= w.imag <= self.im_max + pad)

    @classmethod
    def parse(cls, text: str) -> "SearchRect":
        parts = [float(p) for p in text.split(",")]
        if len(parts) != 4:
            raise DomainError("rectangle must be re_min,re_max,im_min,im_max")
        return cls(*parts)


@dataclass(frozen=True)
class MembershipReport:
    member: bool
    length_ok: bool
    bound_violations: tuple[int, ...]
    asymmetry: float | None


def validate_structure(s: Structure, a: AdmissibleSet, atol: float = 0.0) -> MembershipReport:
    """Check ``s`` against the pointwise bounds, the support length and (optionally) mirror symmetry."""
    bad = np.flatnonzero((s.n < a.n_minus - atol) | (s.n > a.n_plus + atol))
    length_ok = abs(s.L - a.L) <= 1e-12 * a.L
    asym = asymmetry(s) if a.symmetric else None
    member = length_ok and bad.size == 0 and (asym is None or asym <= atol)
    return MembershipReport(member, length_ok, tuple(int(i) for i in bad), asym)


def project_to_admissible(s: Structure, a: AdmissibleSet) -> Structure:
    return s.with_values(np.clip(s.n, a.n_minus, a.n_plus))


SLIVER = 1e-10


def _merged_grid(s: Structure) -> np.ndarray:
    L = s.L
    pts = np.union1d(s.edges, L - s.edges)
    pts = pts[(pts >= 0) & (pts <= L)]
    # mirrored breakpoints closer than SLIVER * L collapse to one; continuous
    # breakpoint optimization leaves mirror pairs ~1e-12 apart, far below resolution
    keep = np.concatenate([[True], np.diff(pts) > SLIVER * L])
    pts = pts[keep]
    pts[0], pts[-1] = 0.0, L
    return pts


def symmetrize(s: Structure) -> Structure:
    """Replace ``n(x)`` by ``(n(x) + n(L - x)) / 2`` on the mirror-closed breakpoint grid."""
    if asymmetry(s) == 0.0:
        return s
    pts = _merged_grid(s)
    L = s.L
    mids = 0.5 * (pts[:-1] + pts[1:])
    vals = 0.5 * (s.value_at(mids) + s.value_at(L - mids))
    # exact mirror equality on the grid
    vals = 0.5 * (vals + vals[::-1])
    return Structure(pts, vals)


def asymmetry(s: Structure) -> float:
    """L-infinity norm of ``n(x) - n(L - x)`` sampled at every cell of the merged grid."""
    pts = _merged_grid(s)
    mids = 0.5 * (pts[:-1] + pts[1:])
    return float(np.max(np.abs(s.value_at(mids) - s.value_at(s.L - mids))))


def merge_cells(s: Structure, tol: float = 0.0) -> Structure:
    """Coalesce runs of adjacent cells whose values agree to ``tol``.

    A run grows while its value range stays within ``tol`` (so adjacent
    values differ by at most ``tol``); the merged cell takes the mid-range
    value.  Greedy growth gives the fewest such runs.
    """
    edges, vals = [0.0], []
    lo = hi = s.n[0]
    for k in range(1, len(s.n) + 1):
        if k < len(s.n):
            nlo, nhi = min(lo, s.n[k]), max(hi, s.n[k])
            if nhi - nlo <= tol:
                lo, hi = nlo, nhi
                continue
        vals.append(float(lo) if lo == hi else float(0.5 * (lo + hi)))
        edges.append(float(s.edges[k]))
        if k < len(s.n):
            lo = hi = s.n[k]
    return Structure(np.array(edges), np.array(vals))


def write_structure(s: Structure, path) -> None:
    """Write the JSON structure format with 17 significant digits per number."""
    def num(x: float) -> str:
        return format(float(x), ".17g")

    rows = ",\n    ".join(
        f'{{"x0": {num(a)}, "x1": {num(b)}, "n": {num(v)}}}' for a, b, v in s.cells
    )
    text = f'{{\n  "L": {num(s.L)},\n  "cells": [\n    {rows}\n  ]\n}}\n'
    Path(path).write_text(text, encoding="utf-8")


def structure_from_dict(data: dict) -> Structure:
    try:
        cells = [(c["x0"], c["x1"], c["n"]) for c in data["cells"]]
    except (KeyError, TypeError) as exc:
        raise StructureError(f"malformed structure file: {exc}") from exc
    s = Structure.from_cells(cells)
    if "L" in data and abs(float(data["L"]) - s.L) > 1e-12 * s.L:
        raise StructureError("declared L does not match the last cell edge")
    return s


def read_structure(path) -> Structure:
    return structure_from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


@dataclass(frozen=True, eq=False)
class Mode:
    """Outgoing mode as per-cell exponential coefficients.

    Inside cell ``k``: ``u(x) = A[k] exp(i w n_k (x - x_k)) + B[k] exp(-i w n_k (x - x_k))``
    with ``x_k`` the left edge of the cell.  Normalized so that ``u(0) = 1``.
    """

    structure: Structure
    omega: complex
    A: np.ndarray
    B: np.ndarray
    normalization: str = "u(0)=1"

    def scaled(self, c: complex) -> "Mode":
        return Mode(self.structure, self.omega, c * self.A, c * self.B, normalization=f"u(0)={c!r}")


@dataclass(frozen=True)
class ResonancePair:
    omega: complex
    mode: Mode
    residual: float
    iterations: int = 0
    dF: complex = field(default=0j, compare=False)
