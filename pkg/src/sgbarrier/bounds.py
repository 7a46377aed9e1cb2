"""Closed-form probability bounds from barrier certificates.

Two finite-horizon formulas bound the probability that the barrier's
supremum crosses the unsafe level beta within the horizon:

  product    1 - (1 - eta/beta) (1 - c/beta)^T
  geometric  (eta/beta) (1-k)^T + (c/(k beta)) (1 - (1-k)^T)

The `theorem` mode selects by the sign of beta - c/k as stated;
`paper_compat` always applies the product formula (this reproduces the
published case-study numbers); `tightest` takes the smaller admissible
value.  Known tension, flagged in reports rather than adjudicated: the
geometric formula decreases in T when eta > c/k although the event it
bounds grows, and its c = 0 long-horizon limit (0) lies below the
infinite-horizon bound eta/beta.

Per-element bounds resolve the initial/unsafe regions from the edge
symbols of the reachability element and check them against the
certificate's declared roles; elements without a certificate get the
trivial bound 1.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

from .automata import AcceptingRun, Dfa, ReachElement, reach_elements
from .poly import Box, boxes_equal
from .system import Interconnection, LabeledRegions

MODES = ("theorem", "paper_compat", "tightest")


class RegionResolutionError(ValueError):
    """Edge symbols resolve to regions incompatible with the certificate."""


def _clamp(p: float) -> float:
    return min(1.0, max(0.0, p))


def kushner_bound(
    eta: float,
    beta: float,
    c: float,
    kappa_hat: float,
    horizon: int,
    mode: str = "tightest",
) -> float:
    """Probability that the barrier crosses beta within the horizon."""
    if mode not in MODES:
        raise ValueError(f"unknown bound mode {mode!r}")
    if not 0 <= eta < beta:
        raise ValueError("need 0 <= eta < beta")
    if c < 0:
        raise ValueError("need c >= 0")
    if not 0 < kappa_hat < 1:
        raise ValueError("need kappa_hat in (0, 1)")
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    product = 1.0 - (1.0 - eta / beta) * (1.0 - c / beta) ** horizon
    decay = (1.0 - kappa_hat) ** horizon
    geometric = (eta / beta) * decay + (c / (kappa_hat * beta)) * (1.0 - decay)
    if mode == "paper_compat":
        return _clamp(product)
    if mode == "theorem":
        return _clamp(product if beta <= c / kappa_hat else geometric)
    if beta > c / kappa_hat:
        return _clamp(min(product, geometric))
    return _clamp(product)


def infinite_horizon_bound(eta: float, beta: float, c: float = 0.0) -> float:
    """Unbounded-horizon crossing bound; only valid for c = 0."""
    if c != 0.0:
        raise ValueError("infinite-horizon bound requires c = 0 in the certificate")
    if not 0 <= eta < beta:
        raise ValueError("need 0 <= eta < beta")
    return _clamp(eta / beta)


@dataclass(frozen=True)
class ReachBound:
    """Crossing bound for one reachability element, with provenance."""

    element: tuple  # (source, via, target, horizon)
    value: float
    status: str  # "certified" | "trivial"
    inputs: dict = field(default_factory=dict)
    note: str = ""

    def to_dict(self) -> dict:
        out = {
            "element": list(self.element),
            "value": self.value,
            "status": self.status,
            "inputs": dict(self.inputs),
        }
        if self.note:
            out["note"] = self.note
        return out


def resolve_region_union(
    regions: LabeledRegions, symbols, inter: Interconnection
) -> dict:
    """Per-subsystem union of region boxes for a set of propositions.

    The remainder proposition has no box representation and cannot play
    a certificate region role.
    """
    out: dict = {s.sid: [] for s in inter.subsystems}
    for prop in sorted(symbols):
        if prop == regions.remainder:
            raise RegionResolutionError(
                f"proposition {prop!r} is the remainder region and has no box form"
            )
        boxes = regions.boxes_for(prop)
        for sid, box in boxes.items():
            out[sid].append(box)
    return {sid: tuple(bs) for sid, bs in out.items()}


def element_bound(
    element: ReachElement,
    composite,
    regions: LabeledRegions,
    inter: Interconnection,
    mode: str = "tightest",
) -> ReachBound:
    """Bound for one element using the partition's composite certificate.

    The certificate's declared initial/unsafe boxes must equal the
    regions resolved from the element's edge symbols (per subsystem,
    union over disjunctive symbols); a mismatch is an error, a missing
    certificate gives the trivial bound 1.
    """
    if composite is None:
        return ReachBound(
            element=element.key(),
            value=1.0,
            status="trivial",
            note="no certificate for this element",
        )
    want_initial = resolve_region_union(regions, element.entry_symbols, inter)
    want_unsafe = resolve_region_union(regions, element.exit_symbols, inter)
    for rec in composite.members:
        if not boxes_equal(rec.initial, want_initial[rec.subsystem_id]):
            raise RegionResolutionError(
                f"certificate for {rec.subsystem_id!r} declares an initial region "
                f"different from the one resolved for element {element.key()}"
            )
        if not boxes_equal(rec.unsafe, want_unsafe[rec.subsystem_id]):
            raise RegionResolutionError(
                f"certificate for {rec.subsystem_id!r} declares an unsafe region "
                f"different from the one resolved for element {element.key()}"
            )
    value = kushner_bound(
        composite.eta, composite.beta, composite.c, composite.kappa_hat, element.horizon, mode
    )
    note = ""
    if mode == "theorem" and composite.beta > composite.c / composite.kappa_hat:
        note = (
            "geometric formula applied; note it shrinks with the horizon even "
            "though the crossing event grows"
        )
    return ReachBound(
        element=element.key(),
        value=value,
        status="certified",
        inputs={
            "eta": composite.eta,
            "beta": composite.beta,
            "c": composite.c,
            "kappa_hat": composite.kappa_hat,
            "horizon": element.horizon,
            "mode": mode,
        },
        note=note,
    )


@dataclass(frozen=True)
class ViolationBound:
    """Sum over runs of the product of element bounds."""

    value: float
    per_run: tuple  # ((run states, (element keys), product), ...)
    skipped_short_runs: tuple  # runs of length 2, excluded from the sum

    @property
    def immediate_violation(self) -> bool:
        # a length-2 accepting run means the starting region itself
        # already decides the outcome against the specification
        return bool(self.skipped_short_runs)

    def to_dict(self) -> dict:
        return {
            "value": self.value,
            "per_run": [
                {"run": list(states), "elements": [list(k) for k in keys], "product": product}
                for states, keys, product in self.per_run
            ],
            "skipped_short_runs": [list(states) for states in self.skipped_short_runs],
            "immediate_violation": self.immediate_violation,
        }


def violation_bound(
    dfa_c: Dfa,
    runs: Sequence[AcceptingRun],
    max_len: int,
    element_bounds: Mapping[tuple, ReachBound],
) -> ViolationBound:
    """Aggregate per-element bounds over the runs of one proposition.

    Every run of length >= 3 must have bounds for all of its elements.
    Length-2 runs contribute nothing to the sum; they are reported
    separately because they mean the initial region is already decided.
    """
    total = 0.0
    rows = []
    short = []
    for run in runs:
        if len(run.states) < 3:
            short.append(run.states)
            continue
        keys = []
        product = 1.0
        for el in reach_elements(dfa_c, run, max_len):
            key = el.key()
            if key not in element_bounds:
                raise KeyError(f"missing bound for element {key}")
            product *= element_bounds[key].value
            keys.append(key)
        rows.append((run.states, tuple(keys), product))
        total += product
    return ViolationBound(
        value=_clamp(total), per_run=tuple(rows), skipped_short_runs=tuple(short)
    )


@dataclass(frozen=True)
class SatisfactionBound:
    """Lower bound on specification satisfaction from one initial region."""

    proposition: str
    violation: float
    lower: float
    detail: ViolationBound | None = None

    def to_dict(self) -> dict:
        out = {
            "proposition": self.proposition,
            "violation": self.violation,
            "lower": self.lower,
        }
        if self.detail is not None:
            out["detail"] = self.detail.to_dict()
        return out


def satisfaction_lower_bound(
    violation: float | ViolationBound, proposition: str = ""
) -> SatisfactionBound:
    """Lower bound 1 - violation, clamped to [0, 1].

    When given a full ViolationBound whose proposition admits a
    length-2 accepting run, the satisfaction bound is the trivial 0:
    such a start already decides the outcome.
    """
    detail = None
    if isinstance(violation, ViolationBound):
        detail = violation
        value = 1.0 if violation.immediate_violation else violation.value
    else:
        value = float(violation)
    value = _clamp(value)
    return SatisfactionBound(
        proposition=proposition, violation=value, lower=1.0 - value, detail=detail
    )
