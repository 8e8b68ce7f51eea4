"""Adjoint sensitivity of a resonance frequency to the cell values of ``n``.

For a simple resonance the shift under ``n -> n + dn`` is
``dw = -2 alpha w^2 int n u^2 dn`` with the normalization
``1/alpha = 2 w int n^2 u^2 + i (u(0)^2 + u(L)^2)``.  Per cell this integrates
``u^2`` in closed form, so the gradient costs one mode reconstruction.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .analysis import abs2_integrals, square_integrals
from .core import ResforgeError, ResonancePair, Structure
from .forward1d import evaluate_mode, newton_resonance


class DegenerateResonanceError(ResforgeError):
    """The adjoint normalization vanishes: the resonance is (nearly) degenerate."""


class OracleFailure(ResforgeError):
    pass


@dataclass(frozen=True)
class GradientVector:
    d_re_omega: np.ndarray
    d_im_omega: np.ndarray
    structure: Structure

    @property
    def complex(self) -> np.ndarray:
        return self.d_re_omega + 1j * self.d_im_omega

    def density(self) -> np.ndarray:
        """Pointwise variation recovered by dividing by the cell widths."""
        return self.complex / self.structure.widths

    def __len__(self):
        return len(self.d_re_omega)


def compute_alpha(pair: ResonancePair, s: Structure | None = None, floor: float = 1e-10):
    """Both expressions for ``alpha`` (boundary form, volume form); they agree at a true root."""
    mode = pair.mode
    s = mode.structure if s is None else s
    w = pair.omega
    u2, ux2 = square_integrals(mode)
    n2u2 = np.sum(s.n**2 * u2)
    u0, _ = evaluate_mode(mode, 0.0)
    uL, _ = evaluate_mode(mode, s.L)
    inv1 = 2 * w * n2u2 + 1j * (u0**2 + uL**2)
    inv2 = (np.sum(ux2) + w**2 * n2u2) / w
    a2, _ = abs2_integrals(mode)
    scale = 2 * abs(w) * np.sum(s.n**2 * a2) + abs(u0) ** 2 + abs(uL) ** 2
    if abs(inv1) < floor * scale:
        raise DegenerateResonanceError(
            f"|1/alpha| = {abs(inv1):.3e} relative {abs(inv1) / scale:.3e}: degenerate resonance")
    return complex(1 / inv1), complex(1 / inv2)


def gradient_cells(pair: ResonancePair, s: Structure | None = None) -> GradientVector:
    """``d omega / d n_k`` for a uniform shift of each cell value."""
    mode = pair.mode
    s = mode.structure if s is None else s
    alpha, _ = compute_alpha(pair, s)
    u2, _ = square_integrals(mode)
    g = -2 * alpha * pair.omega**2 * s.n * u2
    return GradientVector(g.real.copy(), g.imag.copy(), s)


def finite_difference_gradient(s: Structure, omega_root: complex, cell_index: int,
                               h: float = 1e-5, tol: float = 1e-13) -> complex:
    """Central difference of the tracked root under ``n_k -> n_k +- h``."""
    if not 1e-7 <= h <= 1e-3:
        raise ValueError("h must lie in [1e-7, 1e-3]")

    def solve(sign):
        n = s.n.copy()
        n[cell_index] += sign * h
        return newton_resonance(s.with_values(n), omega_root, tol=tol).omega

    with ThreadPoolExecutor(max_workers=2) as ex:
        futures = [ex.submit(solve, sign) for sign in (1.0, -1.0)]
        try:
            plus, minus = (f.result() for f in futures)
        except ResforgeError as exc:
            raise OracleFailure(f"perturbed solve failed for cell {cell_index}; reduce h") from exc
    return (plus - minus) / (2 * h)


def interface_gradient(pair: ResonancePair, s: Structure | None = None) -> np.ndarray:
    """``d omega / d p_k`` for moving each interior breakpoint ``p_k`` to the right.

    The layer on the right shrinks and the left value spreads, so
    ``d omega / d p = -alpha w^2 (n_left^2 - n_right^2) u(p)^2``.
    """
    mode = pair.mode
    s = mode.structure if s is None else s
    alpha, _ = compute_alpha(pair, s)
    p = s.edges[1:-1]
    u, _ = evaluate_mode(mode, p)
    jump = s.n[:-1] ** 2 - s.n[1:] ** 2
    return -alpha * pair.omega**2 * jump * np.atleast_1d(u) ** 2
