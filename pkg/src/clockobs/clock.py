"""Clock observable over a permutation circuit.

A circuit with gates V_1..V_s is coupled to a one-hot clock register of s
two-level wires. The forward operator applies the gate selected by the clock
and advances the excitation one position (wrapping s -> 1). Because every
gate permutes basis states, the forward operator permutes (basis state,
clock position) pairs, and the orbit of any initial pair is a cycle of some
length d on which the operator acts as a cyclic shift.

The observable of interest is the symmetrized operator (forward + backward)/2.
Restricted to a d-cycle its eigenvalues are cos(2*pi*j/d); each non-real
shift eigenvalue pairs up, so cos values for 0 < j < d/2 carry multiplicity 2
while +1 (and -1 for even d) are simple. The cycle's starting vector weights
every shift eigenvector equally, so a measurement on it returns cos(2*pi*j/d)
with probability 2/d (paired) or 1/d (simple). ``spectral_model`` produces
this table exactly, with rational probabilities; ``dense_orbit_oracle``
recomputes the spectrum numerically from the d x d matrix as an independent
check.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator

import numpy as np

from .circuits import BasisState, Circuit
from .errors import BudgetExceededError, DimensionError

DENSE_ORACLE_CAP = 4096


@dataclass(frozen=True)
class ClockedState:
    """Circuit basis state plus the one-hot clock position in 1..s."""

    circuit_state: BasisState
    clock_pos: int


@dataclass(frozen=True)
class ForwardOperator:
    """Sum over gates of (gate tensor clock-advance); acts as a permutation
    on valid (state, clock) pairs."""

    circuit: Circuit

    @property
    def s(self) -> int:
        return self.circuit.s


def _check_clock(op: ForwardOperator, state: ClockedState) -> None:
    if not 1 <= state.clock_pos <= op.s:
        raise DimensionError(
            f"clock position {state.clock_pos} outside 1..{op.s}; "
            "only one-hot clock states are supported"
        )


def apply_forward(op: ForwardOperator, state: ClockedState) -> ClockedState:
    """Apply the gate under the clock and advance the excitation (s wraps to 1)."""
    _check_clock(op, state)
    gate = op.circuit.gates[state.clock_pos - 1]
    values = list(state.circuit_state.values)
    gate.apply_values(values)
    nxt = state.clock_pos % op.s + 1
    return ClockedState(BasisState(tuple(values)), nxt)


@dataclass(frozen=True)
class Orbit:
    """The cycle of the forward operator through ``initial``; ``dimension``
    is the cycle length d. Iterating yields the d states in order."""

    operator: ForwardOperator
    initial: ClockedState
    dimension: int

    def __iter__(self) -> Iterator[ClockedState]:
        state = self.initial
        for _ in range(self.dimension):
            yield state
            state = apply_forward(self.operator, state)

    def __len__(self) -> int:
        return self.dimension


def compute_orbit(
    op: ForwardOperator, initial: ClockedState, max_steps: int | None = None
) -> Orbit:
    """Traverse until the initial pair recurs; verifies that every
    intermediate state is distinct from the start (cycle property)."""
    _check_clock(op, initial)
    if max_steps is None:
        max_steps = 32 * op.s * op.circuit.layout.counter_size + op.s + 16
    seen = {(initial.circuit_state.values, initial.clock_pos)}
    state = initial
    for step in range(1, max_steps + 1):
        state = apply_forward(op, state)
        key = (state.circuit_state.values, state.clock_pos)
        if state == initial:
            return Orbit(op, initial, step)
        if key in seen:
            raise BudgetExceededError(
                "orbit re-entered an intermediate state before the start; "
                "the operator is not a permutation"
            )
        seen.add(key)
    raise BudgetExceededError(f"no recurrence within {max_steps} forward steps")


# ---------------------------------------------------------------------------
# spectrum of the symmetrized shift on a d-cycle

@dataclass(frozen=True)
class SpectralLine:
    index: int  # j in 0..floor(d/2)
    eigenvalue: float  # cos(2*pi*j/d)
    multiplicity: int  # 1 or 2
    probability: Fraction  # 1/d or 2/d


@dataclass(frozen=True)
class SpectralModel:
    dimension: int
    lines: tuple[SpectralLine, ...]

    def probabilities(self) -> list[Fraction]:
        return [line.probability for line in self.lines]

    def expanded_eigenvalues(self) -> np.ndarray:
        """All d eigenvalues with multiplicity, ascending."""
        vals: list[float] = []
        for line in self.lines:
            vals.extend([line.eigenvalue] * line.multiplicity)
        return np.sort(np.array(vals))


def spectral_model(d: int) -> SpectralModel:
    """Exact eigenvalue / multiplicity / outcome-probability table for the
    symmetrized d-cycle, as seen from the equal-weight starting vector."""
    if d < 1:
        raise ValueError(f"dimension must be >= 1, got {d}")
    lines = []
    for j in range(d // 2 + 1):
        simple = j == 0 or (d % 2 == 0 and j == d // 2)
        mult = 1 if simple else 2
        lines.append(
            SpectralLine(
                index=j,
                eigenvalue=math.cos(2.0 * math.pi * j / d),
                multiplicity=mult,
                probability=Fraction(mult, d),
            )
        )
    return SpectralModel(dimension=d, lines=tuple(lines))


def dense_orbit_oracle(d: int) -> np.ndarray:
    """Eigenvalues of (C + C^T)/2 for the d x d cyclic shift C, ascending,
    from a dense symmetric eigensolver. Independent check of the closed form."""
    if d < 1:
        raise ValueError(f"dimension must be >= 1, got {d}")
    if d > DENSE_ORACLE_CAP:
        raise ValueError(f"dimension {d} exceeds the dense-oracle cap {DENSE_ORACLE_CAP}")
    if d == 1:
        return np.array([1.0])
    shift = np.zeros((d, d))
    for i in range(d):
        shift[(i + 1) % d, i] = 1.0
    sym = (shift + shift.T) / 2.0
    return np.linalg.eigvalsh(sym)


# ---------------------------------------------------------------------------
# locality and scaling helpers

@dataclass(frozen=True)
class LocalityReport:
    term_supports: tuple[int, ...]  # per gate: wires touched + 2 clock wires
    max_support: int
    term_count: int


def locality_report(op: ForwardOperator) -> LocalityReport:
    """Each forward term couples one gate to two clock wires, so its support
    is the gate's wire count plus 2."""
    supports = tuple(len(g.support) + 2 for g in op.circuit.gates)
    return LocalityReport(
        term_supports=supports,
        max_support=max(supports),
        term_count=len(supports),
    )


@dataclass(frozen=True)
class NormBound:
    power_bound: int  # n**k
    exact_binomial: int  # C(n, k)


def norm_bound(n: int, k: int) -> NormBound:
    """Term-count bound for a k-local observable on n wires with unit-norm
    terms: at most C(n,k) < n**k terms, so the operator norm is at most n**k."""
    if not 1 <= k <= n:
        raise ValueError(f"need 1 <= k <= n, got n={n} k={k}")
    return NormBound(power_bound=n**k, exact_binomial=math.comb(n, k))


def choose_time_scale(bound: float) -> float:
    """Evolution time t with norm*t <= pi, making eigenvalue readout of the
    evolution operator one-to-one."""
    if bound <= 0:
        raise ValueError(f"norm bound must be positive, got {bound}")
    return math.pi / bound
