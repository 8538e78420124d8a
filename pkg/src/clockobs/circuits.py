"""Reversible permutation-gate circuits compiled from machine specs.

Two artifacts come out of this module. ``build_step_circuit`` emits the
single-step circuit U for a machine: a move gate on (head, tape_index), a
wall of index-controlled swaps that fetches the scanned cell into the
accumulator, a rewrite gate on (head, accumulator), and the mirror wall that
writes the cell back. One application of U performs the current state's
transition (a move immediately followed by a rewrite is fused into the same
application).

``build_wrapper_circuit`` wraps U into the self-looping circuit V. V adds a
one-bit ``solution`` register, a four-valued ``operation_mode`` register and
two width-(m+1) counters, where m is the bit size of the machine register
space. The four modes are:

    run (00)         apply U, count up
    pad (01)         count up, pad the pass out to counter = all-ones
    unwind-pad (10)  count down until the idle counter empties
    unwind-run (11)  apply the inverse of U, count down

Mode changes are controlled swaps: run<->pad when the idle counter is empty
and the head is final, pad<->unwind-pad at counter all-ones, unwind-run<->run
at counter zero, unwind-pad<->unwind-run when the idle counter is empty and
the head is final. The solution bit is flipped once per pass, when the mode
is pad, the counter is all-ones, and the result cell holds the accept symbol.
Iterating V therefore returns every register to its initial value after
2*(2**(m+1)-1) applications, except the solution bit which accumulates the
machine's answer; a machine that accepts doubles the cycle.

All gates are explicit permutation tables over the wires they touch. With
cell merging on (the default), the mode, head, index, accumulator, result
cell and solution registers share a single qudit wire, so every emitted gate
touches at most two wires.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import BudgetExceededError, DimensionError, PermutationError
from .rtm import ACCEPT_SYMBOL, RtmSpec, StateKind

MODE_RUN, MODE_PAD, MODE_UNPAD, MODE_UNRUN = 0, 1, 2, 3

# register names used in layouts
R_MODE = "operation_mode"
R_HEAD = "head"
R_INDEX = "tape_index"
R_ACC = "acc"
R_SOLUTION = "solution"
R_COUNTER = "counter"
R_IDLE = "idle_counter"


def tape_register(cell: int) -> str:
    return f"tape_{cell}"


@dataclass(frozen=True)
class Wire:
    """One circuit wire. Merged layouts pack several registers into a single
    qudit wire; ``fields`` records the packed registers, most significant
    first."""

    id: int
    dimension: int
    fields: tuple[str, ...]
    field_dims: tuple[int, ...]

    def __post_init__(self) -> None:
        if self.dimension < 2:
            raise DimensionError(f"wire {self.id} has dimension {self.dimension} < 2")
        prod = 1
        for d in self.field_dims:
            prod *= d
        if prod != self.dimension:
            raise DimensionError(f"wire {self.id} field dims do not multiply out")


@dataclass(frozen=True)
class BasisState:
    """Assignment of one local value per wire."""

    values: tuple[int, ...]

    def packed_index(self, dims: Sequence[int]) -> int:
        idx = 0
        for v, d in zip(self.values, dims):
            idx = idx * d + v
        return idx


@dataclass(frozen=True)
class RegisterLayout:
    """Wiring plan plus the encodings needed to read and write registers.

    ``slots`` maps each register name to its (wire, field) position. ``m`` is
    ceil(log2) of the state-space size of the registers the step circuit acts
    on (head, tape_index, accumulator, tape).
    """

    wires: tuple[Wire, ...]
    slots: dict[str, tuple[int, int]]
    m: int
    merged: bool
    state_ids: tuple[str, ...]
    alphabet: tuple[str, ...]
    n_cells: int
    result_cell: int
    initial_state: str
    final_states: frozenset[str]

    @property
    def counter_size(self) -> int:
        return 2 ** (self.m + 1)

    @property
    def counter_max(self) -> int:
        return self.counter_size - 1

    @property
    def state_index(self) -> dict[str, int]:
        return {s: i for i, s in enumerate(self.state_ids)}

    @property
    def symbol_index(self) -> dict[str, int]:
        return {s: i for i, s in enumerate(self.alphabet)}

    def wire_dims(self) -> tuple[int, ...]:
        return tuple(w.dimension for w in self.wires)

    # -- field packing ------------------------------------------------------

    def decode_wire(self, wire: Wire, value: int) -> list[int]:
        out = [0] * len(wire.field_dims)
        for i in range(len(wire.field_dims) - 1, -1, -1):
            out[i] = value % wire.field_dims[i]
            value //= wire.field_dims[i]
        return out

    def encode_wire(self, wire: Wire, fields: Sequence[int]) -> int:
        value = 0
        for v, d in zip(fields, wire.field_dims):
            if not 0 <= v < d:
                raise DimensionError(f"field value {v} out of range on wire {wire.id}")
            value = value * d + v
        return value

    def get_register(self, state: BasisState, register: str) -> int:
        w, f = self.slots[register]
        return self.decode_wire(self.wires[w], state.values[w])[f]

    def set_registers(self, state: BasisState, updates: dict[str, int]) -> BasisState:
        values = list(state.values)
        by_wire: dict[int, dict[int, int]] = {}
        for reg, val in updates.items():
            w, f = self.slots[reg]
            by_wire.setdefault(w, {})[f] = val
        for w, fields in by_wire.items():
            decoded = self.decode_wire(self.wires[w], values[w])
            for f, val in fields.items():
                decoded[f] = val
            values[w] = self.encode_wire(self.wires[w], decoded)
        return BasisState(tuple(values))

    def zero_state(self) -> BasisState:
        return BasisState((0,) * len(self.wires))

    def initial_basis_state(self, input_word: Sequence[str] | str) -> BasisState:
        """Machine registers loaded with the input, everything else zero."""
        word = list(input_word)
        if len(word) > self.n_cells:
            raise DimensionError(
                f"input of length {len(word)} exceeds {self.n_cells} tape cells"
            )
        sym = self.symbol_index
        updates = {R_HEAD: self.state_index[self.initial_state], R_INDEX: 0}
        for cell in range(1, self.n_cells + 1):
            s = word[cell - 1] if cell <= len(word) else self.alphabet[0]
            updates[tape_register(cell)] = sym[s]
        return self.set_registers(self.zero_state(), updates)

    def describe_state(self, state: BasisState) -> dict[str, int | str]:
        """Human-oriented register view of a basis state."""
        out: dict[str, int | str] = {}
        for reg in self.slots:
            v = self.get_register(state, reg)
            if reg == R_HEAD:
                out[reg] = self.state_ids[v]
            elif reg == R_INDEX:
                out[reg] = v + 1
            elif reg == R_ACC or reg.startswith("tape_"):
                out[reg] = self.alphabet[v]
            else:
                out[reg] = v
        return out


@dataclass(frozen=True)
class PermGate:
    """A permutation of the joint basis of the wires in ``support``.

    ``table[i] = j`` maps packed input index i to packed output index j,
    mixed-radix over the support dims. The table must be a bijection.
    """

    support: tuple[int, ...]
    dims: tuple[int, ...]
    table: np.ndarray
    label: str

    def __post_init__(self) -> None:
        size = 1
        for d in self.dims:
            size *= d
        if len(self.table) != size:
            raise PermutationError(f"gate {self.label}: table size {len(self.table)} != {size}")
        if not np.array_equal(np.sort(self.table), np.arange(size)):
            raise PermutationError(f"gate {self.label}: table is not a bijection")

    def apply_values(self, values: list[int]) -> None:
        idx = 0
        for w, d in zip(self.support, self.dims):
            idx = idx * d + values[w]
        out = int(self.table[idx])
        for pos in range(len(self.support) - 1, -1, -1):
            d = self.dims[pos]
            values[self.support[pos]] = out % d
            out //= d


@dataclass(frozen=True)
class Circuit:
    layout: RegisterLayout
    gates: tuple[PermGate, ...]

    @property
    def s(self) -> int:
        return len(self.gates)

    def apply_values(self, values: list[int]) -> None:
        for gate in self.gates:
            gate.apply_values(values)


def apply_circuit(circuit: Circuit, state: BasisState) -> BasisState:
    """Apply every gate in order; pure permutation action on basis states."""
    dims = circuit.layout.wire_dims()
    if len(state.values) != len(dims):
        raise DimensionError("state width does not match layout")
    for v, d in zip(state.values, dims):
        if not 0 <= v < d:
            raise DimensionError(f"state value {v} out of range for dimension {d}")
    values = list(state.values)
    circuit.apply_values(values)
    return BasisState(tuple(values))


# ---------------------------------------------------------------------------
# layouts

def _machine_field_list(spec: RtmSpec) -> list[tuple[str, int]]:
    q = len(spec.states)
    a = len(spec.alphabet)
    fields = [(R_HEAD, q), (R_INDEX, spec.tape_cells), (R_ACC, a)]
    fields += [(tape_register(i), a) for i in range(1, spec.tape_cells + 1)]
    return fields


def state_bits(spec: RtmSpec) -> int:
    space = 1
    for _, d in _machine_field_list(spec):
        space *= d
    return max(1, (space - 1).bit_length())  # ceil(log2(space)), at least 1


def _build_layout(
    spec: RtmSpec, groups: list[list[tuple[str, int]]], m: int, merged: bool
) -> RegisterLayout:
    # registers with a single possible value (a one-cell tape index, say)
    # cannot stand as wires of their own; fold them into the first real wire
    def group_dim(group: list[tuple[str, int]]) -> int:
        dim = 1
        for _, d in group:
            dim *= d
        return dim

    trivial = [f for g in groups if group_dim(g) == 1 for f in g]
    groups = [g for g in groups if group_dim(g) >= 2]
    if not groups:
        raise DimensionError("machine state space is trivial; nothing to wire up")
    if trivial:
        groups = [groups[0] + trivial] + groups[1:]

    wires = []
    slots: dict[str, tuple[int, int]] = {}
    for wid, group in enumerate(groups):
        dims = tuple(d for _, d in group)
        dim = 1
        for d in dims:
            dim *= d
        wires.append(
            Wire(id=wid, dimension=dim, fields=tuple(n for n, _ in group), field_dims=dims)
        )
        for fidx, (name, _) in enumerate(group):
            if name in slots:
                raise DimensionError(f"register {name} assigned twice")
            slots[name] = (wid, fidx)
    return RegisterLayout(
        wires=tuple(wires),
        slots=slots,
        m=m,
        merged=merged,
        state_ids=tuple(spec.states),
        alphabet=spec.alphabet,
        n_cells=spec.tape_cells,
        result_cell=spec.result_cell,
        initial_state=spec.initial_state,
        final_states=spec.final_states,
    )


def machine_layout(spec: RtmSpec) -> RegisterLayout:
    """One wire per machine register: head, tape_index, acc, tape cells."""
    groups = [[f] for f in _machine_field_list(spec)]
    return _build_layout(spec, groups, m=state_bits(spec), merged=False)


def wrapper_layout(spec: RtmSpec, merge_cells: bool = True) -> RegisterLayout:
    """Full layout for the self-looping circuit.

    Merged: one core qudit wire packing (mode, head, index, acc, result cell,
    solution), one wire per remaining tape cell, one counter wire, one idle
    wire. Every wrapper gate then touches at most two wires. Unmerged: one
    wire per register.
    """
    m = state_bits(spec)
    q = len(spec.states)
    a = len(spec.alphabet)
    counter_dim = 2 ** (m + 1)
    rc = spec.result_cell

    if merge_cells:
        core = [
            (R_MODE, 4),
            (R_HEAD, q),
            (R_INDEX, spec.tape_cells),
            (R_ACC, a),
            (tape_register(rc), a),
            (R_SOLUTION, 2),
        ]
        groups = [core]
        groups += [
            [(tape_register(i), a)]
            for i in range(1, spec.tape_cells + 1)
            if i != rc
        ]
        groups += [[(R_COUNTER, counter_dim)], [(R_IDLE, counter_dim)]]
    else:
        groups = [[(R_MODE, 4)], [(R_HEAD, q)], [(R_INDEX, spec.tape_cells)], [(R_ACC, a)]]
        groups += [[(tape_register(i), a)] for i in range(1, spec.tape_cells + 1)]
        groups += [[(R_SOLUTION, 2)], [(R_COUNTER, counter_dim)], [(R_IDLE, counter_dim)]]
    return _build_layout(spec, groups, m=m, merged=merge_cells)


# ---------------------------------------------------------------------------
# permutation completion and gate lifting

def complete_permutation(
    universe: Sequence[tuple], required: dict[tuple, tuple]
) -> dict[tuple, tuple]:
    """Extend a partial injective map to a full permutation of ``universe``.

    Points outside the required domain keep their identity image whenever it
    is still free; the remaining domain and range are matched in sorted
    order. Raises if the required entries already collide.
    """
    uni = list(universe)
    uni_set = set(uni)
    for k, v in required.items():
        if k not in uni_set or v not in uni_set:
            raise PermutationError(f"required entry {k}->{v} leaves the universe")
    taken = set(required.values())
    if len(taken) != len(required):
        images: dict[tuple, tuple] = {}
        for k, v in required.items():
            if v in images:
                raise PermutationError(
                    f"entries {images[v]} and {k} share the image {v}; "
                    "machine is not reversible"
                )
            images[v] = k
    perm = dict(required)
    leftovers = []
    for x in uni:
        if x in perm:
            continue
        if x not in taken:
            perm[x] = x
            taken.add(x)
        else:
            leftovers.append(x)
    free = sorted(y for y in uni_set - taken)
    for x, y in zip(sorted(leftovers), free):
        perm[x] = y
    return perm


def lift_gate(
    layout: RegisterLayout,
    registers: Sequence[str],
    fn: Callable[[dict[str, int]], dict[str, int] | None],
    label: str,
) -> PermGate:
    """Materialize a register-level map as a permutation gate on the wires
    covering those registers.

    ``fn`` receives the values of every register living on the touched wires
    and returns the changed ones (or None for identity). Registers that share
    a wire with the targets ride along untouched.
    """
    wire_ids = sorted({layout.slots[r][0] for r in registers})
    touched = [layout.wires[w] for w in wire_ids]
    dims = tuple(w.dimension for w in touched)
    size = 1
    for d in dims:
        size *= d
    table = np.empty(size, dtype=np.int64)
    for packed in range(size):
        rem = packed
        wire_vals = [0] * len(touched)
        for pos in range(len(touched) - 1, -1, -1):
            wire_vals[pos] = rem % dims[pos]
            rem //= dims[pos]
        env: dict[str, int] = {}
        for w, val in zip(touched, wire_vals):
            for name, fval in zip(w.fields, layout.decode_wire(w, val)):
                env[name] = fval
        changes = fn(dict(env))
        if changes:
            env.update(changes)
        out = 0
        for pos, w in enumerate(touched):
            out = out * dims[pos] + layout.encode_wire(
                w, [env[name] for name in w.fields]
            )
        table[packed] = out
    return PermGate(tuple(w.id for w in touched), dims, table, label)


# ---------------------------------------------------------------------------
# step-circuit gate maps

def _moving_pair_map(spec: RtmSpec, layout: RegisterLayout) -> dict[tuple, tuple]:
    """Permutation of (head, index) pairs realizing the moving transitions.

    Rule images take priority; states left untouched keep their identity when
    no rule image collides with it, and the leftovers are matched canonically
    so the table stays a bijection.
    """
    sidx = layout.state_index
    n = layout.n_cells
    universe = [(s, i) for s in range(len(layout.state_ids)) for i in range(n)]
    required: dict[tuple, tuple] = {}
    for state, rule in spec.moving_rules.items():
        for i in range(n):
            required[(sidx[state], i)] = (sidx[rule.target], (i + rule.direction) % n)
    return complete_permutation(universe, required)


def _rw_pair_map(spec: RtmSpec, layout: RegisterLayout) -> dict[tuple, tuple]:
    """Permutation of (head, acc) pairs realizing the read-write transitions."""
    sidx = layout.state_index
    aidx = layout.symbol_index
    universe = [
        (s, a) for s in range(len(layout.state_ids)) for a in range(len(layout.alphabet))
    ]
    required = {
        (sidx[r.source], aidx[r.read]): (sidx[r.target], aidx[r.write])
        for r in spec.rw_rules.values()
    }
    return complete_permutation(universe, required)


def _invert(pair_map: dict[tuple, tuple]) -> dict[tuple, tuple]:
    return {v: k for k, v in pair_map.items()}


def build_moving_gate(
    spec: RtmSpec, layout: RegisterLayout | None = None
) -> PermGate:
    """The gate on (head, tape_index) for all moving transitions."""
    layout = layout or machine_layout(spec)
    pair = _moving_pair_map(spec, layout)

    def fn(env: dict[str, int]) -> dict[str, int]:
        h, i = pair[(env[R_HEAD], env[R_INDEX])]
        return {R_HEAD: h, R_INDEX: i}

    return lift_gate(layout, [R_HEAD, R_INDEX], fn, "move")


def _wall_fn(cell: int) -> Callable[[dict[str, int]], dict[str, int] | None]:
    reg = tape_register(cell)

    def fn(env: dict[str, int]) -> dict[str, int] | None:
        if env[R_INDEX] != cell - 1:
            return None
        return {R_ACC: env[reg], reg: env[R_ACC]}

    return fn


def build_rw_gates(
    spec: RtmSpec, layout: RegisterLayout | None = None
) -> list[PermGate]:
    """Swap wall, rewrite gate on (head, acc), mirror swap wall."""
    layout = layout or machine_layout(spec)
    pair = _rw_pair_map(spec, layout)

    def rewrite(env: dict[str, int]) -> dict[str, int]:
        h, a = pair[(env[R_HEAD], env[R_ACC])]
        return {R_HEAD: h, R_ACC: a}

    wall = [
        lift_gate(layout, [R_INDEX, R_ACC, tape_register(i)], _wall_fn(i), f"swap[{i}]")
        for i in range(1, spec.tape_cells + 1)
    ]
    w_gate = lift_gate(layout, [R_HEAD, R_ACC], rewrite, "rewrite")
    return wall + [w_gate] + wall


def _guard_initial_state(spec: RtmSpec) -> None:
    """The move gate can only hold a non-moving state fixed when no moving
    rule lands on it (rule images occupy those table slots). The initial
    state sits at an application boundary, so reject machines whose initial
    state the circuit could not keep faithful."""
    init = spec.initial_state
    kind = spec.kind(init)
    if kind in (StateKind.MOVE_RIGHT, StateKind.MOVE_LEFT):
        return
    if any(r.target == init for r in spec.moving_rules.values()):
        raise PermutationError(
            f"initial state {init!r} is the target of a moving rule; "
            "the step circuit cannot hold it fixed at an application boundary"
        )
    if kind is StateKind.FINAL and any(
        r.target == init for r in spec.rw_rules.values()
    ):
        raise PermutationError(
            f"initial final state {init!r} is the target of a read-write rule; "
            "the step circuit cannot hold it fixed at an application boundary"
        )


def build_step_circuit(spec: RtmSpec) -> Circuit:
    """Circuit for one machine transition (move first, then read-write; a
    move that lands on a read-write state performs both in one application)."""
    _guard_initial_state(spec)
    layout = machine_layout(spec)
    gates = [build_moving_gate(spec, layout)] + build_rw_gates(spec, layout)
    return Circuit(layout=layout, gates=tuple(gates))


# ---------------------------------------------------------------------------
# self-looping wrapper

def _controlled(mode_value: int, fn):
    def wrapped(env: dict[str, int]):
        if env[R_MODE] != mode_value:
            return None
        return fn(env)

    return wrapped


def nominal_cycle_length(m: int) -> int:
    """Wrapper cycle length for a rejecting run: 2*(2**(m+1)-1)."""
    return 2 * (2 ** (m + 1) - 1)


def build_wrapper_circuit(spec: RtmSpec, merge_cells: bool = True) -> Circuit:
    """The self-looping circuit V (see the module docstring for the mode
    rules and gate ordering)."""
    _guard_initial_state(spec)
    layout = wrapper_layout(spec, merge_cells=merge_cells)
    cmax = layout.counter_max
    csize = layout.counter_size
    moving = _moving_pair_map(spec, layout)
    rewrite = _rw_pair_map(spec, layout)
    moving_inv = _invert(moving)
    rewrite_inv = _invert(rewrite)
    final_idx = frozenset(layout.state_index[s] for s in layout.final_states)
    accept = layout.symbol_index.get(ACCEPT_SYMBOL)
    rc_reg = tape_register(spec.result_cell)

    def move_fn(pair):
        def fn(env):
            h, i = pair[(env[R_HEAD], env[R_INDEX])]
            return {R_HEAD: h, R_INDEX: i}

        return fn

    def rw_fn(pair):
        def fn(env):
            h, a = pair[(env[R_HEAD], env[R_ACC])]
            return {R_HEAD: h, R_ACC: a}

        return fn

    gates: list[PermGate] = []

    # forward payload, controlled on mode=run
    gates.append(
        lift_gate(
            layout,
            [R_MODE, R_HEAD, R_INDEX],
            _controlled(MODE_RUN, move_fn(moving)),
            "run:move",
        )
    )
    for i in range(1, spec.tape_cells + 1):
        gates.append(
            lift_gate(
                layout,
                [R_MODE, R_INDEX, R_ACC, tape_register(i)],
                _controlled(MODE_RUN, _wall_fn(i)),
                f"run:swap[{i}]",
            )
        )
    gates.append(
        lift_gate(
            layout,
            [R_MODE, R_HEAD, R_ACC],
            _controlled(MODE_RUN, rw_fn(rewrite)),
            "run:rewrite",
        )
    )
    for i in range(1, spec.tape_cells + 1):
        gates.append(
            lift_gate(
                layout,
                [R_MODE, R_INDEX, R_ACC, tape_register(i)],
                _controlled(MODE_RUN, _wall_fn(i)),
                f"run:swap2[{i}]",
            )
        )

    # inverse payload, controlled on mode=unwind-run, gates in reverse order
    for i in range(spec.tape_cells, 0, -1):
        gates.append(
            lift_gate(
                layout,
                [R_MODE, R_INDEX, R_ACC, tape_register(i)],
                _controlled(MODE_UNRUN, _wall_fn(i)),
                f"unrun:swap2[{i}]",
            )
        )
    gates.append(
        lift_gate(
            layout,
            [R_MODE, R_HEAD, R_ACC],
            _controlled(MODE_UNRUN, rw_fn(rewrite_inv)),
            "unrun:rewrite",
        )
    )
    for i in range(spec.tape_cells, 0, -1):
        gates.append(
            lift_gate(
                layout,
                [R_MODE, R_INDEX, R_ACC, tape_register(i)],
                _controlled(MODE_UNRUN, _wall_fn(i)),
                f"unrun:swap[{i}]",
            )
        )
    gates.append(
        lift_gate(
            layout,
            [R_MODE, R_HEAD, R_INDEX],
            _controlled(MODE_UNRUN, move_fn(moving_inv)),
            "unrun:move",
        )
    )

    # counter: up in run/pad, down in unwind modes
    def counter_fn(env):
        c = env[R_COUNTER]
        if env[R_MODE] in (MODE_RUN, MODE_PAD):
            return {R_COUNTER: (c + 1) % csize}
        return {R_COUNTER: (c - 1) % csize}

    gates.append(lift_gate(layout, [R_MODE, R_COUNTER], counter_fn, "counter"))

    # idle counter: up in pad, down in unwind-pad, held elsewhere. The
    # unwind-run mode must hold it (not decrement) or the next pass would
    # start with a nonzero idle counter and never leave run mode.
    def idle_fn(env):
        ic = env[R_IDLE]
        if env[R_MODE] == MODE_PAD:
            return {R_IDLE: (ic + 1) % csize}
        if env[R_MODE] == MODE_UNPAD:
            return {R_IDLE: (ic - 1) % csize}
        return None

    gates.append(lift_gate(layout, [R_MODE, R_IDLE], idle_fn, "idle"))

    # copy the answer: flip solution once per pass
    def solution_fn(env):
        if (
            env[R_MODE] == MODE_PAD
            and env[R_COUNTER] == cmax
            and accept is not None
            and env[rc_reg] == accept
        ):
            return {R_SOLUTION: env[R_SOLUTION] ^ 1}
        return None

    gates.append(
        lift_gate(layout, [R_MODE, R_COUNTER, rc_reg, R_SOLUTION], solution_fn, "answer")
    )

    # mode changes as controlled swaps; this order lets a pass close even
    # when the initial state is already final
    def swap_modes(a, b, cond):
        def fn(env):
            if env[R_MODE] == a and cond(env):
                return {R_MODE: b}
            if env[R_MODE] == b and cond(env):
                return {R_MODE: a}
            return None

        return fn

    halted = lambda env: env[R_IDLE] == 0 and env[R_HEAD] in final_idx  # noqa: E731
    gates.append(
        lift_gate(
            layout,
            [R_MODE, R_IDLE, R_HEAD],
            swap_modes(MODE_RUN, MODE_PAD, halted),
            "mode:run<->pad",
        )
    )
    gates.append(
        lift_gate(
            layout,
            [R_MODE, R_COUNTER],
            swap_modes(MODE_PAD, MODE_UNPAD, lambda env: env[R_COUNTER] == cmax),
            "mode:pad<->unpad",
        )
    )
    gates.append(
        lift_gate(
            layout,
            [R_MODE, R_COUNTER],
            swap_modes(MODE_UNRUN, MODE_RUN, lambda env: env[R_COUNTER] == 0),
            "mode:unrun<->run",
        )
    )
    gates.append(
        lift_gate(
            layout,
            [R_MODE, R_IDLE, R_HEAD],
            swap_modes(MODE_UNPAD, MODE_UNRUN, halted),
            "mode:unpad<->unrun",
        )
    )

    return Circuit(layout=layout, gates=tuple(gates))


def circuit_orbit_length(
    circuit: Circuit, initial: BasisState, max_steps: int | None = None
) -> int:
    """Smallest r >= 1 with circuit^r(initial) == initial, by traversal."""
    if max_steps is None:
        max_steps = 16 * circuit.layout.counter_size + 16
    values = list(initial.values)
    start = tuple(values)
    for step in range(1, max_steps + 1):
        circuit.apply_values(values)
        if tuple(values) == start:
            return step
    raise BudgetExceededError(
        f"no recurrence within {max_steps} applications of the circuit"
    )


# ---------------------------------------------------------------------------
# serialization

DUMP_FORMAT = "clockobs-circuit/1"


def dump_circuit(circuit: Circuit) -> dict:
    """JSON-ready dump with deterministic ordering, for inspection and replay."""
    lay = circuit.layout
    return {
        "format": DUMP_FORMAT,
        "header": {
            "merged_cells": lay.merged,
            "m": lay.m,
            "counter_size": lay.counter_size,
            # rule choice: the unwind-run mode holds the idle counter at its
            # current value instead of decrementing it
            "unwind_run_idle_policy": "hold",
        },
        "layout": {
            "wires": [
                {
                    "id": w.id,
                    "dimension": w.dimension,
                    "fields": list(w.fields),
                    "field_dims": list(w.field_dims),
                }
                for w in lay.wires
            ],
            "registers": {name: list(slot) for name, slot in sorted(lay.slots.items())},
            "states": list(lay.state_ids),
            "alphabet": list(lay.alphabet),
            "tape_cells": lay.n_cells,
            "result_cell": lay.result_cell,
        },
        "gates": [
            {
                "label": g.label,
                "support": list(g.support),
                "dims": list(g.dims),
                "table": [int(x) for x in g.table],
            }
            for g in circuit.gates
        ],
    }


def dump_circuit_json(circuit: Circuit) -> str:
    return json.dumps(dump_circuit(circuit), sort_keys=True, indent=None, separators=(",", ":"))


def replay_dump(dump: dict, values: Sequence[int]) -> tuple[int, ...]:
    """Apply a dumped circuit's gate tables to a raw value vector."""
    if dump.get("format") != DUMP_FORMAT:
        raise DimensionError(f"unknown dump format {dump.get('format')!r}")
    vals = list(values)
    for g in dump["gates"]:
        support, dims, table = g["support"], g["dims"], g["table"]
        idx = 0
        for w, d in zip(support, dims):
            idx = idx * d + vals[w]
        out = table[idx]
        for pos in range(len(support) - 1, -1, -1):
            vals[support[pos]] = out % dims[pos]
            out //= dims[pos]
    return tuple(vals)
