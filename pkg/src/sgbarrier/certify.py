"""Certificate verification for stochastic barrier conditions.

A sub-barrier record bundles a barrier polynomial, a controller, the
constants (eta, beta, c), linear gains, and region roles.  Verification
checks four conditions:

  output_floor   barrier dominates the scaled squared output everywhere
  initial_cap    barrier at most eta on the initial region
  unsafe_floor   barrier at least beta on the unsafe region
  drift          expected next-step barrier below the max of the scaled
                 current barrier, the scaled squared internal input, and c

Two modes: `sampled` falsification on uniform samples, and `rigorous`
interval branch-and-bound that either proves each condition with an
explicit slack margin or returns a concrete witness.  The squared
infinity norm is handled as a per-coordinate family of checks, never as
a single polynomial.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .poly import EPS_NUM, Box, Polynomial
from .system import Subsystem, close_loop

VERIFIED = "verified"  # proved by branch-and-bound
PASSED = "passed"  # survived sampled falsification
FALSIFIED = "falsified"
INCONCLUSIVE = "inconclusive"  # budget or width floor exhausted


@dataclass(frozen=True)
class LinearGain:
    """Linear class-K-infinity gain s -> slope * s (slope 0 = zero gain)."""

    slope: float

    def __post_init__(self):
        if self.slope < 0:
            raise ValueError("gain slope must be nonnegative")

    def __call__(self, s: float) -> float:
        return self.slope * s

    def inverse(self) -> "LinearGain":
        if self.slope <= 0:
            raise ValueError("zero gain has no inverse")
        return LinearGain(1.0 / self.slope)


@dataclass(frozen=True)
class PolynomialController:
    """State-feedback controller, one polynomial per input coordinate."""

    polys: tuple

    def pieces(self, state_box: Box):
        yield state_box, self.polys

    def inputs_at(self, state: Mapping[str, float]) -> tuple:
        return tuple(p(state) for p in self.polys)

    def to_dict(self) -> dict:
        return {"kind": "polynomial", "polys": [str(p) for p in self.polys]}


@dataclass(frozen=True)
class PiecewiseController:
    """Piecewise-constant controller over state boxes (finite input sets)."""

    entries: tuple  # ((Box, (u_1, ..., u_m)), ...)

    def pieces(self, state_box: Box):
        for box, values in self.entries:
            clipped = box.intersect(state_box)
            if clipped is not None:
                yield clipped, tuple(Polynomial.constant(v) for v in values)

    def inputs_at(self, state: Mapping[str, float]) -> tuple:
        for box, values in self.entries:
            if box.contains(state, tol=1e-12):
                return tuple(values)
        raise ValueError("state not covered by any controller piece")

    def to_dict(self) -> dict:
        return {
            "kind": "piecewise",
            "pieces": [{"box": box.to_dict(), "values": list(v)} for box, v in self.entries],
        }


@dataclass(frozen=True)
class CsbcRecord:
    """Sub-barrier certificate for one subsystem."""

    subsystem_id: str
    barrier: Polynomial
    controller: PolynomialController | PiecewiseController
    eta: float
    beta: float
    c: float
    alpha: LinearGain
    kappa: LinearGain
    rho: LinearGain
    initial: tuple  # union of boxes
    unsafe: tuple  # union of boxes

    def __post_init__(self):
        if self.eta < 0:
            raise ValueError("eta must be >= 0")
        if self.beta <= 0:
            raise ValueError("beta must be > 0")
        if self.c < 0:
            raise ValueError("c must be >= 0")
        if not 0 < self.kappa.slope < 1:
            raise ValueError("kappa slope must be in (0, 1)")
        if self.alpha.slope <= 0:
            raise ValueError("alpha slope must be > 0")

    def to_dict(self) -> dict:
        return {
            "subsystem": self.subsystem_id,
            "barrier": str(self.barrier),
            "controller": self.controller.to_dict(),
            "eta": self.eta,
            "beta": self.beta,
            "c": self.c,
            "alpha": self.alpha.slope,
            "kappa": self.kappa.slope,
            "rho": self.rho.slope,
            "initial": [b.to_dict() for b in self.initial],
            "unsafe": [b.to_dict() for b in self.unsafe],
        }

    def rename(self, mapping: Mapping[str, str], subsystem_id: str) -> "CsbcRecord":
        """Instance a template certificate under fresh variable names."""
        if isinstance(self.controller, PolynomialController):
            controller = PolynomialController(tuple(p.rename(mapping) for p in self.controller.polys))
        else:
            controller = PiecewiseController(
                tuple((box.rename(mapping), values) for box, values in self.controller.entries)
            )
        return CsbcRecord(
            subsystem_id=subsystem_id,
            barrier=self.barrier.rename(mapping),
            controller=controller,
            eta=self.eta,
            beta=self.beta,
            c=self.c,
            alpha=self.alpha,
            kappa=self.kappa,
            rho=self.rho,
            initial=tuple(b.rename(mapping) for b in self.initial),
            unsafe=tuple(b.rename(mapping) for b in self.unsafe),
        )


@dataclass
class ConditionCheck:
    """Outcome of one condition: status plus audit counters."""

    name: str
    status: str
    witness: dict | None = None
    violation: float = 0.0
    samples: int = 0
    boxes: int = 0
    frontier: int = 0
    note: str = ""

    def to_dict(self) -> dict:
        out = {
            "name": self.name,
            "status": self.status,
            "violation": self.violation,
            "samples": self.samples,
            "boxes": self.boxes,
        }
        if self.witness is not None:
            out["witness"] = {k: float(v) for k, v in sorted(self.witness.items())}
        if self.frontier:
            out["frontier"] = self.frontier
        if self.note:
            out["note"] = self.note
        return out


@dataclass
class VerificationReport:
    subject: str
    mode: str
    eps: float
    conditions: dict = field(default_factory=dict)

    @property
    def status(self) -> str:
        stats = [c.status for c in self.conditions.values()]
        if any(s == FALSIFIED for s in stats):
            return FALSIFIED
        if any(s == INCONCLUSIVE for s in stats):
            return INCONCLUSIVE
        if all(s == VERIFIED for s in stats):
            return VERIFIED
        return PASSED

    @property
    def ok(self) -> bool:
        return self.status in (VERIFIED, PASSED)

    def findings(self) -> list:
        return [c for c in self.conditions.values() if c.status == FALSIFIED]

    def to_dict(self) -> dict:
        return {
            "subject": self.subject,
            "mode": self.mode,
            "eps": self.eps,
            "status": self.status,
            "conditions": {k: v.to_dict() for k, v in sorted(self.conditions.items())},
        }


@dataclass(frozen=True)
class VerifyMode:
    """Verification effort knobs.

    width_floor is relative to the initial width of each dimension;
    boxes narrower than that in every dimension stop splitting and are
    reported as frontier."""

    kind: str = "sampled"
    samples: int = 10_000
    budget: int = 1_000_000
    width_floor: float = 1e-5
    eps: float = EPS_NUM
    seed: int = 0

    def __post_init__(self):
        if self.kind not in ("sampled", "rigorous"):
            raise ValueError(f"unknown verification mode {self.kind!r}")


def record_from_dict(data: Mapping, subsystem_id: str | None = None) -> CsbcRecord:
    """Rebuild a certificate from its exported dict form.

    The controller accepts either the exported dict form or a bare list
    of polynomial strings.  Round-trips with CsbcRecord.to_dict().
    """
    from .poly import parse_poly

    ctrl = data.get("controller", [])
    if isinstance(ctrl, Mapping):
        if ctrl.get("kind") == "piecewise":
            controller = PiecewiseController(
                tuple(
                    (Box({v: tuple(iv) for v, iv in piece["box"].items()}), tuple(piece["values"]))
                    for piece in ctrl["pieces"]
                )
            )
        else:
            controller = PolynomialController(tuple(parse_poly(s) for s in ctrl["polys"]))
    else:
        controller = PolynomialController(tuple(parse_poly(s) for s in ctrl))
    return CsbcRecord(
        subsystem_id=subsystem_id or data.get("subsystem", "subsystem"),
        barrier=parse_poly(data["barrier"]),
        controller=controller,
        eta=float(data["eta"]),
        beta=float(data["beta"]),
        c=float(data["c"]),
        alpha=LinearGain(float(data["alpha"])),
        kappa=LinearGain(float(data["kappa"])),
        rho=LinearGain(float(data["rho"])),
        initial=tuple(Box({v: tuple(iv) for v, iv in b.items()}) for b in data["initial"]),
        unsafe=tuple(Box({v: tuple(iv) for v, iv in b.items()}) for b in data["unsafe"]),
    )


# ---------------------------------------------------------------------
# expectation of the barrier one step ahead


def expected_barrier(barrier: Polynomial, closed_sub: Subsystem) -> Polynomial:
    """Exact expected barrier after one closed-loop step.

    Substitutes the (input-free) dynamics into the barrier and
    integrates out the noise variables; the result is a polynomial over
    state and internal-input variables.
    """
    if closed_sub.input_vars:
        raise ValueError("expected_barrier requires a closed-loop subsystem")
    subst = dict(zip(closed_sub.state_vars, closed_sub.dynamics))
    pushed = barrier.substitute(subst)
    return pushed.expectation(closed_sub.noise, closed_sub.noise_vars)


# ---------------------------------------------------------------------
# branch-and-bound engine


class _BranchAndBound:
    """Depth-first interval branch-and-bound over a box.

    box_passes(box) must be sound: True only if the property holds on
    the whole box.  point_violation(point) returns the violation margin
    at a point (> eps means a genuine counterexample).
    """

    def __init__(self, domain: Box, budget: int, width_floor: float):
        self.domain = domain
        self.budget = budget
        self.floors = {v: max(width_floor * domain.width(v), 1e-300) for v in domain.varnames}
        self.boxes = 0
        self.frontier = 0

    def run(self, box_passes, point_violation, eps):
        stack = [self.domain]
        witness = None
        worst = 0.0
        while stack:
            box = stack.pop()
            self.boxes += 1
            if self.boxes > self.budget:
                self.frontier += len(stack) + 1
                return (INCONCLUSIVE, witness, worst)
            if box_passes(box):
                continue
            center = box.center()
            violation = point_violation(center)
            if violation > eps:
                return (FALSIFIED, center, violation)
            splittable = [
                v
                for v in box.varnames
                if box.width(v) > self.floors[v]
            ]
            if not splittable:
                self.frontier += 1
                continue
            var = max(splittable, key=lambda v: box.width(v) / self.domain.width(v))
            stack.extend(box.split(var))
        if self.frontier:
            return (INCONCLUSIVE, None, 0.0)
        return (VERIFIED, None, 0.0)


def _lex_smallest(points: Sequence[Mapping[str, float]]):
    def key(pt):
        return tuple(pt[v] for v in sorted(pt))

    return min(points, key=key)


def _sampled_min(poly: Polynomial, boxes: Sequence[Box], n: int, rng, eps: float) -> ConditionCheck:
    """Sampled falsification of poly >= 0 on a union of boxes."""
    check = ConditionCheck(name="", status=PASSED)
    witnesses = []
    worst = 0.0
    for box in boxes:
        cols = box.sample_columns(rng, n)
        vals = poly.eval_batch(cols)
        check.samples += n
        bad = np.flatnonzero(vals < -eps)
        if bad.size:
            worst = max(worst, float(-vals[bad].min()))
            idx = bad[np.lexsort([cols[v][bad] for v in sorted(cols)][::-1])][0]
            witnesses.append({v: float(cols[v][idx]) for v in cols})
    if witnesses:
        check.status = FALSIFIED
        check.witness = _lex_smallest(witnesses)
        check.violation = worst
    return check


def _rigorous_nonneg(poly: Polynomial, boxes: Sequence[Box], mode: VerifyMode, rng) -> ConditionCheck:
    """Prove poly >= -eps on a union of boxes, or find a witness."""
    pre = _sampled_min(poly, boxes, min(mode.samples, 2048), rng, mode.eps)
    if pre.status == FALSIFIED:
        return pre
    check = ConditionCheck(name="", status=VERIFIED, samples=pre.samples)
    for box in boxes:
        bb = _BranchAndBound(box, mode.budget, mode.width_floor)

        def box_passes(b):
            lo, _ = poly.interval_bound(b)
            return lo >= -mode.eps

        def point_violation(pt):
            return -poly(pt)

        status, witness, violation = bb.run(box_passes, point_violation, mode.eps)
        check.boxes += bb.boxes
        check.frontier += bb.frontier
        if status == FALSIFIED:
            check.status = FALSIFIED
            check.witness = witness
            check.violation = violation
            return check
        if status == INCONCLUSIVE:
            check.status = INCONCLUSIVE
    return check


def _prove_nonneg(poly: Polynomial, boxes: Sequence[Box], mode: VerifyMode, rng) -> ConditionCheck:
    if mode.kind == "sampled":
        return _sampled_min(poly, boxes, mode.samples, rng, mode.eps)
    return _rigorous_nonneg(poly, boxes, mode, rng)


# ---------------------------------------------------------------------
# drift condition


def _drift_violation_columns(e_vals, b_vals, w_sq_max, kappa, rho, c):
    rhs = np.maximum(kappa * b_vals, np.maximum(rho * w_sq_max, c))
    return e_vals - rhs


def _check_drift_piece(
    e_poly: Polynomial,
    barrier: Polynomial,
    record: CsbcRecord,
    domain: Box,
    w_vars: tuple,
    mode: VerifyMode,
    rng,
) -> ConditionCheck:
    kappa, rho, c = record.kappa.slope, record.rho.slope, record.c

    def point_violation(pt):
        wsq = max((pt[v] ** 2 for v in w_vars), default=0.0)
        rhs = max(kappa * barrier(pt), rho * wsq, c)
        return e_poly(pt) - rhs

    if mode.kind == "sampled":
        cols = domain.sample_columns(rng, mode.samples)
        e_vals = e_poly.eval_batch(cols)
        b_vals = barrier.eval_batch(cols)
        if w_vars:
            w_sq = np.max([cols[v] ** 2 for v in w_vars], axis=0)
        else:
            w_sq = np.zeros(mode.samples)
        gap = _drift_violation_columns(e_vals, b_vals, w_sq, kappa, rho, c)
        check = ConditionCheck(name="", status=PASSED, samples=mode.samples)
        bad = np.flatnonzero(gap > mode.eps)
        if bad.size:
            idx = bad[np.lexsort([cols[v][bad] for v in sorted(cols)][::-1])][0]
            check.status = FALSIFIED
            check.witness = {v: float(cols[v][idx]) for v in cols}
            check.violation = float(gap[bad].max())
        return check

    pre = ConditionCheck(name="", status=VERIFIED)
    cols = domain.sample_columns(rng, min(mode.samples, 2048))
    e_vals = e_poly.eval_batch(cols)
    b_vals = barrier.eval_batch(cols)
    nsamp = len(e_vals)
    pre.samples = nsamp
    if w_vars:
        w_sq = np.max([cols[v] ** 2 for v in w_vars], axis=0)
    else:
        w_sq = np.zeros(nsamp)
    gap = _drift_violation_columns(e_vals, b_vals, w_sq, kappa, rho, c)
    bad = np.flatnonzero(gap > mode.eps)
    if bad.size:
        idx = bad[np.lexsort([cols[v][bad] for v in sorted(cols)][::-1])][0]
        pre.status = FALSIFIED
        pre.witness = {v: float(cols[v][idx]) for v in cols}
        pre.violation = float(gap[bad].max())
        return pre

    diff_kappa = barrier.scale(kappa) - e_poly
    diff_rho = [Polynomial.variable(v) ** 2 * rho - e_poly for v in w_vars] if rho > 0 else []

    def box_passes(b):
        if diff_kappa.interval_bound(b)[0] >= -mode.eps:
            return True
        _, e_hi = e_poly.interval_bound(b)
        if e_hi <= c + mode.eps:
            return True
        if rho > 0 and w_vars:
            # exact lower bound of max_j w_j^2 over a box
            floor = max(min(lo**2, hi**2) if lo * hi > 0 else 0.0 for lo, hi in (b.interval(v) for v in w_vars))
            if e_hi <= rho * floor + mode.eps:
                return True
            for d in diff_rho:
                if d.interval_bound(b)[0] >= -mode.eps:
                    return True
        return False

    bb = _BranchAndBound(domain, mode.budget, mode.width_floor)
    status, witness, violation = bb.run(box_passes, point_violation, mode.eps)
    pre.boxes = bb.boxes
    pre.frontier = bb.frontier
    pre.status = status
    pre.witness = witness
    pre.violation = violation
    return pre


def _merge_piece_checks(checks: Sequence[ConditionCheck]) -> ConditionCheck:
    merged = ConditionCheck(name="", status=VERIFIED)
    if not checks:
        return merged
    falsified = [c for c in checks if c.status == FALSIFIED]
    for c in checks:
        merged.samples += c.samples
        merged.boxes += c.boxes
        merged.frontier += c.frontier
    if falsified:
        worst = max(falsified, key=lambda c: c.violation)
        merged.status = FALSIFIED
        merged.witness = _lex_smallest([c.witness for c in falsified])
        merged.violation = worst.violation
    elif any(c.status == INCONCLUSIVE for c in checks):
        merged.status = INCONCLUSIVE
    elif any(c.status == PASSED for c in checks):
        merged.status = PASSED
    return merged


# ---------------------------------------------------------------------
# public verification entry points


def verify_csbc(record: CsbcRecord, subsystem: Subsystem, mode: VerifyMode) -> VerificationReport:
    """Check all sub-barrier conditions for one subsystem.

    The squared-infinity-norm output condition is a conjunction over
    output coordinates, and the drift disjunction is checked pointwise
    (sampled) or boxwise (rigorous).  A falsified condition carries the
    lexicographically smallest witness found.
    """
    rng = np.random.default_rng(mode.seed)
    report = VerificationReport(subject=record.subsystem_id, mode=mode.kind, eps=mode.eps)
    B = record.barrier

    coord_checks = []
    for h in subsystem.output_coordinates():
        poly = B - (h * h).scale(record.alpha.slope)
        coord_checks.append(_prove_nonneg(poly, [subsystem.state_box], mode, rng))
    check = _merge_piece_checks(coord_checks)
    check.name = "output_floor"
    report.conditions["output_floor"] = check

    check = _prove_nonneg(Polynomial.constant(record.eta) - B, record.initial, mode, rng)
    check.name = "initial_cap"
    report.conditions["initial_cap"] = check

    check = _prove_nonneg(B - record.beta, record.unsafe, mode, rng)
    check.name = "unsafe_floor"
    report.conditions["unsafe_floor"] = check

    piece_checks = []
    for piece_box, ctrl_polys in record.controller.pieces(subsystem.state_box):
        closed = close_loop(subsystem, ctrl_polys)
        e_poly = expected_barrier(B, closed)
        domain = piece_box.join(subsystem.internal_box) if subsystem.internal_vars else piece_box
        piece_checks.append(
            _check_drift_piece(e_poly, B, record, domain, subsystem.internal_vars, mode, rng)
        )
    check = _merge_piece_checks(piece_checks)
    check.name = "drift"
    report.conditions["drift"] = check

    if subsystem.input_box is not None and isinstance(record.controller, PolynomialController):
        range_checks = []
        for var, p in zip(subsystem.input_vars, record.controller.polys):
            lo, hi = subsystem.input_box.interval(var)
            range_checks.append(_prove_nonneg(p - lo, [subsystem.state_box], mode, rng))
            range_checks.append(_prove_nonneg(Polynomial.constant(hi) - p, [subsystem.state_box], mode, rng))
        check = _merge_piece_checks(range_checks)
        check.name = "input_range"
        check.note = "controller values stay inside the admissible input set"
        report.conditions["input_range"] = check

    return report


def verify_cbc(composite, inter, mode: VerifyMode) -> VerificationReport:
    """Check the composite max-form certificate on the interconnection.

    The composite drift is checked through the per-subsystem
    expectation surrogate (the max of scaled member expectations); the
    expectation of the max itself is only bounded by that surrogate up
    to the Jensen gap of the max, which is reported as a note.
    Rigorous drift checking is attempted for at most three subsystems;
    beyond that only sampled falsification runs.
    """
    rng = np.random.default_rng(mode.seed)
    report = VerificationReport(subject="composite", mode=mode.kind, eps=mode.eps)
    members = composite.members
    lambdas = composite.lambdas
    subs = {s.sid: s for s in inter.subsystems}

    gap = ConditionCheck(name="level_gap", status=VERIFIED if composite.beta > composite.eta else FALSIFIED)
    gap.violation = max(0.0, composite.eta - composite.beta)
    gap.note = f"beta={composite.beta:.6g} eta={composite.eta:.6g}"
    report.conditions["level_gap"] = gap

    checks = []
    for rec, lam in zip(members, lambdas):
        poly = Polynomial.constant(composite.eta * lam) - rec.barrier
        checks.append(_prove_nonneg(poly, rec.initial, mode, rng))
    check = _merge_piece_checks(checks)
    check.name = "initial_cap"
    report.conditions["initial_cap"] = check

    best = None
    for rec, lam in zip(members, lambdas):
        poly = rec.barrier - composite.beta * lam
        candidate = _prove_nonneg(poly, rec.unsafe, mode, rng)
        if best is None or candidate.status in (VERIFIED, PASSED):
            best = candidate
        if candidate.status in (VERIFIED, PASSED):
            break
    best.name = "unsafe_floor"
    best.note = "max structure: one member certifies the level on the unsafe product set"
    report.conditions["unsafe_floor"] = best

    # drift surrogate: resolve internal inputs from the wiring and compare
    # the max of scaled member expectations against max(kappa*B, c)
    e_subbed = []
    b_scaled = []
    for rec, lam in zip(members, lambdas):
        sub = subs[rec.subsystem_id]
        closed = close_loop(sub, _controller_polys(rec, sub))
        e_poly = expected_barrier(rec.barrier, closed)
        subst = {}
        for (i, j), binding in inter.wiring.items():
            if i != rec.subsystem_id or binding == "zero":
                continue
            block = subs[j].outputs[i]
            for v, p in zip(binding, block):
                subst[v] = p
        for v in sub.internal_vars:
            subst.setdefault(v, Polynomial.zero())
        e_subbed.append(e_poly.substitute(subst).scale(1.0 / lam))
        b_scaled.append(rec.barrier.scale(1.0 / lam))

    kappa, c = composite.kappa_hat, composite.c
    box = inter.global_state_box()

    def point_violation(pt):
        e_max = max(p(pt) for p in e_subbed)
        b_max = max(p(pt) for p in b_scaled)
        return e_max - max(kappa * b_max, c)

    cols = box.sample_columns(rng, mode.samples)
    e_vals = np.max([p.eval_batch(cols) for p in e_subbed], axis=0)
    b_vals = np.max([p.eval_batch(cols) for p in b_scaled], axis=0)
    gapcols = e_vals - np.maximum(kappa * b_vals, c)
    check = ConditionCheck(name="drift", status=PASSED, samples=mode.samples)
    bad = np.flatnonzero(gapcols > mode.eps)
    if bad.size:
        idx = bad[np.lexsort([cols[v][bad] for v in sorted(cols)][::-1])][0]
        check.status = FALSIFIED
        check.witness = {v: float(cols[v][idx]) for v in cols}
        check.violation = float(gapcols[bad].max())
    elif mode.kind == "rigorous" and len(members) <= 3:
        diffs = [[b.scale(kappa) - e for b in b_scaled] for e in e_subbed]

        def box_passes(bx):
            for e, row in zip(e_subbed, diffs):
                _, e_hi = e.interval_bound(bx)
                if e_hi <= c + mode.eps:
                    continue
                if not any(d.interval_bound(bx)[0] >= -mode.eps for d in row):
                    return False
            return True

        bb = _BranchAndBound(box, mode.budget, mode.width_floor)
        status, witness, violation = bb.run(box_passes, point_violation, mode.eps)
        check.boxes = bb.boxes
        check.frontier = bb.frontier
        check.status = status
        check.witness = witness
        check.violation = violation
    check.note = (
        "surrogate: max of scaled member expectations; the expectation of the "
        "max exceeds it by at most the Jensen gap of the max"
    )
    report.conditions["drift"] = check
    return report


def _controller_polys(record: CsbcRecord, sub: Subsystem) -> tuple:
    if isinstance(record.controller, PolynomialController):
        return record.controller.polys
    raise ValueError("composite drift check requires polynomial controllers")


# ---------------------------------------------------------------------
# additive -> max conversion


def additive_to_max(
    kappa_bar: float,
    rho_bar: float,
    c_bar: float,
    theta: float = 0.5,
    theta_bar: float = 2.0,
    d: float = 1.0,
) -> tuple:
    """Convert an additive drift certificate to max form.

    Given E <= kappa_bar*B + rho_bar*W + c_bar (with W the squared
    internal input norm), returns (kappa, rho, c) such that
    E <= max(kappa*B, rho*W, c), using the linear interpolation
    functions s->theta*s (theta in (0,1)), s->theta_bar*s
    (theta_bar > 1) and s->d*s (d > 0).
    """
    if not 0 < kappa_bar < 1:
        raise ValueError("kappa_bar must be in (0, 1)")
    if rho_bar < 0 or c_bar < 0:
        raise ValueError("rho_bar and c_bar must be >= 0")
    if not 0 < theta < 1:
        raise ValueError("theta must be in (0, 1)")
    if theta_bar <= 1:
        raise ValueError("theta_bar must be > 1")
    if d <= 0:
        raise ValueError("d must be > 0")
    kappa = 1.0 - (1.0 - theta) * (1.0 - kappa_bar)
    rho = (1.0 + d) * rho_bar * theta_bar / ((1.0 - kappa_bar) * theta)
    c = (1.0 + 1.0 / d) * theta_bar * c_bar / ((1.0 - kappa_bar) * theta * (theta_bar - 1.0))
    return kappa, rho, c
