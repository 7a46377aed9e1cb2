"""Discrete-time stochastic control subsystems and their interconnection.

A subsystem has polynomial dynamics over state, external-input,
internal-input, and noise variables, box (or finite) input sets, and an
output map partitioned into per-neighbor blocks.  The self block of the
output map is always the identity on the state (full state
information), so only the blocks addressed to other subsystems are
stored explicitly.

Interconnection semantics are synchronous: at step k every subsystem
reads its internal inputs from the time-k states of its peers.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .poly import Box, NoiseModel, Polynomial, compile_evaluator

ZERO_WIRE = "zero"


@dataclass(frozen=True)
class Subsystem:
    """One dt-SCS node of an interconnected network.

    dynamics[k] gives the next value of state_vars[k]; it may mention
    state, external input, internal input, and noise variables.
    outputs maps a receiver subsystem id to the block of output
    polynomials routed there (over this subsystem's state variables).
    External inputs are either a box (continuous set) or an explicit
    tuple of value tuples (finite set).
    """

    sid: str
    state_vars: tuple
    state_box: Box
    dynamics: tuple
    noise: NoiseModel
    noise_vars: tuple = ()
    input_vars: tuple = ()
    input_box: Box | None = None
    input_values: tuple = ()
    internal_vars: tuple = ()
    internal_box: Box | None = None
    outputs: Mapping[str, tuple] = field(default_factory=dict)

    def __post_init__(self):
        if len(self.dynamics) != len(self.state_vars):
            raise ValueError(
                f"subsystem {self.sid!r}: {len(self.dynamics)} dynamics for "
                f"{len(self.state_vars)} state variables"
            )
        if self.input_vars and self.input_box is None and not self.input_values:
            raise ValueError(f"subsystem {self.sid!r}: inputs need a box or a value list")
        allowed = set(self.state_vars) | set(self.input_vars) | set(self.internal_vars) | set(self.noise_vars)
        for var, dyn in zip(self.state_vars, self.dynamics):
            extra = dyn.variables - allowed
            if extra:
                raise ValueError(f"dynamics of {var!r} reference unknown variables {sorted(extra)}")
        for target, block in self.outputs.items():
            for p in block:
                bad = p.variables - set(self.state_vars)
                if bad:
                    raise ValueError(
                        f"output block {self.sid!r}->{target!r} references non-state variables {sorted(bad)}"
                    )

    @property
    def has_finite_inputs(self) -> bool:
        return bool(self.input_values)

    def output_coordinates(self) -> tuple:
        """Full output vector: identity self block then declared blocks."""
        coords = [Polynomial.variable(v) for v in self.state_vars]
        for target in sorted(self.outputs):
            coords.extend(self.outputs[target])
        return tuple(coords)

    def verification_box(self) -> Box:
        """State x internal-input box for drift checks."""
        if self.internal_vars:
            return self.state_box.join(self.internal_box)
        return self.state_box

    def rename(self, mapping: Mapping[str, str], sid: str | None = None) -> "Subsystem":
        """Instance a template with fresh variable names."""
        return Subsystem(
            sid=sid if sid is not None else self.sid,
            state_vars=tuple(mapping.get(v, v) for v in self.state_vars),
            state_box=self.state_box.rename(mapping),
            dynamics=tuple(p.rename(mapping) for p in self.dynamics),
            noise=self.noise,
            noise_vars=tuple(mapping.get(v, v) for v in self.noise_vars),
            input_vars=tuple(mapping.get(v, v) for v in self.input_vars),
            input_box=self.input_box.rename(mapping) if self.input_box else None,
            input_values=self.input_values,
            internal_vars=tuple(mapping.get(v, v) for v in self.internal_vars),
            internal_box=self.internal_box.rename(mapping) if self.internal_box else None,
            outputs={t: tuple(p.rename(mapping) for p in blk) for t, blk in self.outputs.items()},
        )


def close_loop(subsystem: Subsystem, controller: Sequence[Polynomial]) -> Subsystem:
    """Substitute a state-feedback controller into the dynamics.

    The controller supplies one polynomial per external input variable,
    each over the subsystem's state variables only.
    """
    if len(controller) != len(subsystem.input_vars):
        raise ValueError(
            f"controller has {len(controller)} coordinates for "
            f"{len(subsystem.input_vars)} inputs"
        )
    state = set(subsystem.state_vars)
    for p in controller:
        bad = p.variables - state
        if bad:
            raise ValueError(f"controller references non-state variables {sorted(bad)}")
    subst = dict(zip(subsystem.input_vars, controller))
    return Subsystem(
        sid=subsystem.sid,
        state_vars=subsystem.state_vars,
        state_box=subsystem.state_box,
        dynamics=tuple(p.substitute(subst) for p in subsystem.dynamics),
        noise=subsystem.noise,
        noise_vars=subsystem.noise_vars,
        internal_vars=subsystem.internal_vars,
        internal_box=subsystem.internal_box,
        outputs=subsystem.outputs,
    )


@dataclass(frozen=True)
class Interconnection:
    """Network of subsystems plus a wiring map.

    wiring[(i, j)] binds subsystem i's listed internal variables,
    positionally, to subsystem j's output block addressed to i
    (the connection from j to i).  The value ZERO_WIRE declares an
    explicitly zero connection; internal variables bound nowhere are
    identically zero.
    """

    subsystems: tuple
    wiring: Mapping[tuple, object] = field(default_factory=dict)

    def __post_init__(self):
        ids = [s.sid for s in self.subsystems]
        if len(set(ids)) != len(ids):
            raise ValueError("duplicate subsystem ids")

    def subsystem(self, sid: str) -> Subsystem:
        for s in self.subsystems:
            if s.sid == sid:
                return s
        raise KeyError(sid)

    @property
    def state_vars(self) -> tuple:
        return tuple(v for s in self.subsystems for v in s.state_vars)

    def global_state_box(self) -> Box:
        box = self.subsystems[0].state_box
        for s in self.subsystems[1:]:
            box = box.join(s.state_box)
        return box

    def wired_pairs(self) -> tuple:
        """(receiver, sender) pairs with a live (non-zero) connection."""
        return tuple(
            sorted((i, j) for (i, j), binding in self.wiring.items() if binding != ZERO_WIRE)
        )


def validate(inter: Interconnection) -> list:
    """Compatibility diagnostics; empty iff the interconnection is well formed."""
    diags = []
    by_id = {s.sid: s for s in inter.subsystems}

    seen_vars = {}
    for s in inter.subsystems:
        for v in (*s.state_vars, *s.input_vars, *s.internal_vars, *s.noise_vars):
            if v in seen_vars and seen_vars[v] != s.sid:
                diags.append(f"variable {v!r} used by both {seen_vars[v]!r} and {s.sid!r}")
            seen_vars[v] = s.sid

    bound = {}
    for (i, j), binding in inter.wiring.items():
        if i == j:
            diags.append(f"wiring ({i},{j}): self connections are not allowed")
            continue
        if i not in by_id or j not in by_id:
            diags.append(f"wiring ({i},{j}): unknown subsystem id")
            continue
        if binding == ZERO_WIRE:
            continue
        receiver, sender = by_id[i], by_id[j]
        vars_i = tuple(binding)
        for v in vars_i:
            if v not in receiver.internal_vars:
                diags.append(f"wiring ({i},{j}): {v!r} is not an internal variable of {i!r}")
            if v in bound:
                diags.append(f"wiring ({i},{j}): internal variable {v!r} bound twice")
            bound[v] = (i, j)
        block = sender.outputs.get(i)
        if block is None:
            diags.append(f"wiring ({i},{j}): {j!r} declares no output block for {i!r}")
            continue
        if len(block) != len(vars_i):
            diags.append(
                f"wiring ({i},{j}): output block of dimension {len(block)} bound to "
                f"{len(vars_i)} internal variables"
            )
            continue
        # range compatibility (output space inside the internal input box)
        for v, p in zip(vars_i, block):
            lo, hi = p.interval_bound(sender.state_box)
            wlo, whi = receiver.internal_box.interval(v)
            if lo < wlo - 1e-12 or hi > whi + 1e-12:
                diags.append(
                    f"wiring ({i},{j}): output range [{lo:g}, {hi:g}] exceeds "
                    f"internal box [{wlo:g}, {whi:g}] of {v!r}"
                )

    for s in inter.subsystems:
        for target, block in s.outputs.items():
            if target not in by_id:
                diags.append(f"subsystem {s.sid!r}: output block for unknown id {target!r}")
            for p in block:
                noisy = p.variables & set(s.noise_vars)
                if noisy:
                    diags.append(f"subsystem {s.sid!r}: noise variables {sorted(noisy)} in output map")
    return diags


class StepPlan:
    """Precompiled single-step evaluator for an interconnection.

    Resolves wiring once, compiles dynamics and output blocks, and
    draws noise in subsystem order so stepping is deterministic for a
    given rng state.
    """

    def __init__(self, inter: Interconnection, controllers: Mapping[str, Sequence[Polynomial]] | None = None):
        self.inter = inter
        self._subplans = []
        by_id = {s.sid: s for s in inter.subsystems}
        sources = {}
        for (i, j), binding in inter.wiring.items():
            if binding == ZERO_WIRE:
                continue
            block = by_id[j].outputs[i]
            for v, p in zip(binding, block):
                sources[v] = (j, p)
        for s in inter.subsystems:
            local = (*s.state_vars, *s.input_vars, *s.internal_vars, *s.noise_vars)
            fns = [compile_evaluator(p, local) for p in s.dynamics]
            wires = []
            for v in s.internal_vars:
                if v in sources:
                    j, p = sources[v]
                    wires.append((j, compile_evaluator(p, by_id[j].state_vars)))
                else:
                    wires.append(None)
            ctrl = None
            if controllers and s.sid in controllers:
                ctrl = [compile_evaluator(p, s.state_vars) for p in controllers[s.sid]]
            self._subplans.append((s, fns, wires, ctrl))
        self._state_sources = {s.sid: s.state_vars for s in inter.subsystems}

    def step(self, x: Mapping[str, float], u: Mapping[str, float] | None, rng: np.random.Generator) -> dict:
        state_vecs = {s.sid: [x[v] for v in s.state_vars] for s, _, _, _ in self._subplans}
        nxt = {}
        for s, fns, wires, ctrl in self._subplans:
            vec = list(state_vecs[s.sid])
            if s.input_vars:
                if ctrl is not None:
                    vec.extend(f(state_vecs[s.sid]) for f in ctrl)
                else:
                    vec.extend(u[v] for v in s.input_vars)
            for wire in wires:
                if wire is None:
                    vec.append(0.0)
                else:
                    src, fn = wire
                    vec.append(fn(state_vecs[src]))
            if s.noise_vars:
                vec.extend(s.noise.sample(rng, len(s.noise_vars)))
            for var, f in zip(s.state_vars, fns):
                nxt[var] = f(vec)
        return nxt


def step(
    inter: Interconnection,
    x: Mapping[str, float],
    u: Mapping[str, float] | None,
    rng: np.random.Generator,
) -> dict:
    """One synchronous step of the whole network.

    Internal inputs are resolved from time-k states, noise is sampled
    per subsystem in declaration order, then dynamics are evaluated.
    """
    by_id = {s.sid: s for s in inter.subsystems}
    internal = {}
    for (i, j), binding in inter.wiring.items():
        if binding == ZERO_WIRE:
            continue
        sender = by_id[j]
        block = sender.outputs[i]
        sender_state = {v: x[v] for v in sender.state_vars}
        for v, p in zip(binding, block):
            internal[v] = p(sender_state)
    nxt = {}
    for s in inter.subsystems:
        point = {v: x[v] for v in s.state_vars}
        for v in s.input_vars:
            point[v] = u[v]
        for v in s.internal_vars:
            point[v] = internal.get(v, 0.0)
        if s.noise_vars:
            draws = s.noise.sample(rng, len(s.noise_vars))
            point.update(zip(s.noise_vars, draws))
        for var, dyn in zip(s.state_vars, s.dynamics):
            nxt[var] = dyn(point)
    return nxt


# ---------------------------------------------------------------------
# labeled regions


@dataclass(frozen=True)
class LabeledRegions:
    """Ordered proposition regions with product structure across subsystems.

    Each listed entry maps a proposition to one box per subsystem; the
    designated remainder proposition covers everything else.  Boundary
    ties resolve to the first listed match.
    """

    entries: tuple  # ((prop, {sid: Box}), ...)
    remainder: str

    def __post_init__(self):
        props = [p for p, _ in self.entries]
        if self.remainder in props:
            raise ValueError("remainder proposition cannot also be listed")
        if len(set(props)) != len(props):
            raise ValueError("duplicate proposition")

    @property
    def propositions(self) -> tuple:
        return tuple(p for p, _ in self.entries) + (self.remainder,)

    def boxes_for(self, prop: str) -> "dict | None":
        for p, boxes in self.entries:
            if p == prop:
                return boxes
        if prop == self.remainder:
            return None
        raise KeyError(prop)

    def validate(self, inter: Interconnection) -> list:
        """Pairwise interior disjointness of the listed regions."""
        diags = []
        for a in range(len(self.entries)):
            for b in range(a + 1, len(self.entries)):
                pa, boxes_a = self.entries[a]
                pb, boxes_b = self.entries[b]
                if all(
                    _interiors_overlap(boxes_a[s.sid], boxes_b[s.sid]) for s in inter.subsystems
                ):
                    diags.append(f"regions {pa!r} and {pb!r} overlap")
        return diags


def _interiors_overlap(a: Box, b: Box) -> bool:
    for v in a.varnames:
        alo, ahi = a.interval(v)
        blo, bhi = b.interval(v)
        if min(ahi, bhi) <= max(alo, blo):
            return False
    return True


def label(
    regions: LabeledRegions,
    state: Mapping[str, float],
    inter: Interconnection,
    allow_outside: bool = False,
) -> str:
    """Proposition of a state; first listed match wins on boundaries."""
    if not inter.global_state_box().contains(state):
        if allow_outside:
            return regions.remainder
        raise ValueError("state outside the global state box")
    for prop, boxes in regions.entries:
        if all(boxes[s.sid].contains({v: state[v] for v in s.state_vars}) for s in inter.subsystems):
            return prop
    return regions.remainder
