"""Transfer-operator sums, conformal-measure atoms and eigenvalue ratios.

The weighted pullback operator at exponent t >= 0 sums |f'|^{-t} over
preimages; its n-th power evaluated on the constant function 1 is a sum of
exp(-t * log_deriv) over the 2**n depth-n leaves.  Leaf weights scale like
|l|^{-t n} (50**-20 underflows float64), so every sum is carried in log
domain with a streaming log-sum-exp whose reduction order is fixed by the
word-order block stream: results do not depend on how work is scheduled.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .family import apply, derivative
from .orbits import PLANAR, TreeStats, iter_leaf_blocks, word_of
from .sequences import SequenceSpec, at


def logsumexp(values: np.ndarray) -> float:
    """log(sum(exp(values))) of a 1-D array, max-shifted for stability."""
    m = float(np.max(values))
    return m + math.log(float(np.sum(np.exp(values - m))))


class _StreamLse:
    """Streaming log-sum-exp; combine order is the (fixed) block arrival order."""

    __slots__ = ("shift", "total")

    def __init__(self):
        self.shift = -math.inf
        self.total = 0.0

    def add(self, values: np.ndarray) -> None:
        m = float(np.max(values))
        s = float(np.sum(np.exp(values - m)))
        if m > self.shift:
            self.total = self.total * math.exp(self.shift - m) + s
            self.shift = m
        else:
            self.total += s * math.exp(m - self.shift)

    def value(self) -> float:
        return self.shift + math.log(self.total)


@dataclass(frozen=True)
class OperatorValue:
    """log of the n-step operator sum at one exponent t."""

    t: float
    j: int
    n: int
    log_value: float
    anchor: complex


def operator_power(
    seq: SequenceSpec,
    j: int,
    n: int,
    t_grid,
    anchor: complex = 1.0 + 0.0j,
    metric: str = PLANAR,
    stats: TreeStats | None = None,
) -> list[OperatorValue]:
    """log L^n 1(anchor) for every t in t_grid, in one pass over the leaf blocks.

    At t = 0 the operator counts preimages, so log_value is exactly n log 2.
    """
    t_grid = [float(t) for t in t_grid]
    if any(t < 0 for t in t_grid):
        raise ValueError("exponents t must be >= 0")
    sums = [_StreamLse() for _ in t_grid]
    for _, _, lds in iter_leaf_blocks(seq, j, n, anchor, metric, stats):
        for t, acc in zip(t_grid, sums):
            acc.add(lds * (-t))
    return [OperatorValue(t, j, n, acc.value(), complex(anchor)) for t, acc in zip(t_grid, sums)]


@dataclass(frozen=True)
class RhoEstimate:
    """Finite-depth surrogate for the conformal-measure eigenvalue at fiber j."""

    t: float
    j: int
    value: float
    N: int


def rho_estimate(
    seq: SequenceSpec,
    j: int,
    t: float,
    N: int,
    anchor: complex = 1.0 + 0.0j,
    metric: str = PLANAR,
) -> RhoEstimate:
    """Ratio L^{N-j} 1(anchor) at fiber j over L^{N-j-1} 1(anchor) at fiber j+1.

    Computed as exp of a log difference; exactly deg(f) = 2 at t = 0.
    """
    if N < j + 2:
        raise ValueError("rho_estimate requires N >= j + 2")
    top = operator_power(seq, j, N - j, [t], anchor, metric)[0].log_value
    bottom = operator_power(seq, j + 1, N - j - 1, [t], anchor, metric)[0].log_value
    return RhoEstimate(t=float(t), j=j, value=math.exp(top - bottom), N=N)


@dataclass(frozen=True)
class ConformalAtoms:
    """Atomic approximation of a fiber conformal measure.

    Atoms sit on the depth-(N-j) leaves of the pullback of the anchor; the
    weight of a leaf is exp(-t log_deriv) normalized by the operator sum.
    """

    t: float
    j: int
    N: int
    points: np.ndarray
    weights: np.ndarray
    log_derivs: np.ndarray
    anchor: complex
    log_operator_sum: float  # log L^{N-j} 1(anchor); the normalizer is its reciprocal

    @property
    def depth(self) -> int:
        return self.N - self.j

    def word(self, index: int) -> str:
        return word_of(index, self.depth)


def conformal_atoms(
    seq: SequenceSpec,
    j: int,
    N: int,
    t: float,
    anchor: complex = 1.0 + 0.0j,
    metric: str = PLANAR,
) -> ConformalAtoms:
    """Normalized pullback of a point mass at the anchor through N-j steps."""
    depth = N - j
    if depth < 1:
        raise ValueError("conformal_atoms requires N > j")
    pts_parts = []
    lds_parts = []
    for _, pts, lds in iter_leaf_blocks(seq, j, depth, anchor, metric):
        pts_parts.append(pts)
        lds_parts.append(lds)
    points = np.concatenate(pts_parts)
    lds = np.concatenate(lds_parts)
    log_mass = logsumexp(lds * (-float(t)))
    weights = np.exp(lds * (-float(t)) - log_mass)
    weights /= weights.sum()  # kill the residual of the shifted exponentials
    return ConformalAtoms(
        t=float(t), j=j, N=N, points=points, weights=weights, log_derivs=lds,
        anchor=complex(anchor), log_operator_sum=log_mass,
    )


def measure_ball(m: ConformalAtoms, center: complex, radius: float) -> float:
    """Total weight of atoms in the closed disk of the given center and radius."""
    if radius <= 0:
        raise ValueError("radius must be > 0")
    inside = np.abs(m.points - center) <= radius
    return float(m.weights[inside].sum())


def change_of_variables_check(
    seq: SequenceSpec,
    j: int,
    N: int,
    t: float,
    anchor: complex = 1.0 + 0.0j,
) -> float:
    """Max relative deviation in the atom-level pushforward relation.

    Pushing a depth-(N-j) atom z at fiber j forward by f_{l_{j+1}} lands on
    the fiber-(j+1) atom with the first word bit dropped; conformality says
    weight_j(z) should equal weight_{j+1}(f(z)) * rho^{-1} * |f'(z)|^{-t} up to
    one global constant (the finite-depth eigenvalue surrogate is only defined
    up to a bounded factor).  The best global constant is factored out in log
    space and the worst remaining relative deviation is returned.
    """
    if N - j < 2:
        raise ValueError("change_of_variables_check requires N - j >= 2")
    atoms_j = conformal_atoms(seq, j, N, t, anchor)
    atoms_next = conformal_atoms(seq, j + 1, N, t, anchor)
    rho = rho_estimate(seq, j, t, N, anchor).value
    l_first = at(seq, j + 1)

    half = atoms_next.weights.size
    parent_index = np.arange(atoms_j.weights.size) % half  # drop word bit b_1
    predicted_log = (
        np.log(atoms_next.weights[parent_index])
        - math.log(rho)
        - float(t) * np.log(np.abs(derivative(l_first, atoms_j.points)))
    )
    gap = np.log(atoms_j.weights) - predicted_log
    gap -= gap.mean()  # best global constant in log space
    return float(np.expm1(np.max(np.abs(gap))))


def pushforward_index_check(atoms_j: ConformalAtoms, atoms_next: ConformalAtoms, seq) -> float:
    """max |f(atom_j) - matched atom_{j+1}|; confirms the drop-first-bit pairing."""
    half = atoms_next.points.size
    parent_index = np.arange(atoms_j.points.size) % half
    l_first = at(seq, atoms_j.j + 1)
    images = apply(l_first, atoms_j.points)
    return float(np.abs(images - atoms_next.points[parent_index]).max())


def write_atoms_csv(m: ConformalAtoms, stream) -> None:
    """Rows `word,re,im,weight` in word order."""
    stream.write("word,re,im,weight\n")
    for i in range(m.points.size):
        z = m.points[i]
        stream.write(f"{m.word(i)},{z.real:.17g},{z.imag:.17g},{m.weights[i]:.17g}\n")


def write_operator_csv(values: list[OperatorValue], stream) -> None:
    """Rows `t,n,j,log_value`."""
    stream.write("t,n,j,log_value\n")
    for v in values:
        stream.write(f"{v.t:.17g},{v.n},{v.j},{v.log_value:.17g}\n")
