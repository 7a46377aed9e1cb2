"""Subsystem, interconnection, labeling, and stepping tests."""

import numpy as np
import pytest

from sgbarrier.poly import Box, NoiseModel, Polynomial, parse_poly
from sgbarrier.system import (
    Interconnection,
    LabeledRegions,
    StepPlan,
    Subsystem,
    close_loop,
    label,
    step,
    validate,
)

P = parse_poly

ROOM_ABAR = 1 - 2 * 0.005 - 0.06  # 0.93
ROOM_GAIN = 0.145 * 45  # mu * T_H
ROOM_BIAS = 0.06 * (-15.0)  # iota * T_E


def room_subsystem(i: int, n: int) -> Subsystem:
    t = f"T_{i}"
    w1, w2 = f"wl_{i}", f"wr_{i}"
    u, s = f"u_{i}", f"s_{i}"
    dyn = P(f"{ROOM_ABAR}*{t} + {ROOM_GAIN}*{u} + 0.005*{w1} + 0.005*{w2} + {ROOM_BIAS} + 0.1*{s}")
    left = (i - 1) % n
    right = (i + 1) % n
    return Subsystem(
        sid=f"room{i}",
        state_vars=(t,),
        state_box=Box({t: (1.0, 50.0)}),
        dynamics=(dyn,),
        noise=NoiseModel.gaussian(1.0),
        noise_vars=(s,),
        input_vars=(u,),
        input_box=Box({u: (0.0, 1.0)}),
        internal_vars=(w1, w2),
        internal_box=Box({w1: (1.0, 50.0), w2: (1.0, 50.0)}),
        outputs={f"room{left}": (Polynomial.variable(t),), f"room{right}": (Polynomial.variable(t),)},
    )


def room_network(n: int) -> Interconnection:
    subs = tuple(room_subsystem(i, n) for i in range(n))
    wiring = {}
    for i in range(n):
        wiring[(f"room{i}", f"room{(i - 1) % n}")] = (f"wl_{i}",)
        wiring[(f"room{i}", f"room{(i + 1) % n}")] = (f"wr_{i}",)
    return Interconnection(subs, wiring)


def room_regions(n: int) -> LabeledRegions:
    def boxes(lo, hi):
        return {f"room{i}": Box({f"T_{i}": (lo, hi)}) for i in range(n)}

    return LabeledRegions(
        entries=(
            ("p0", boxes(19.5, 20.0)),
            ("p1", boxes(1.0, 17.0)),
            ("p2", boxes(23.0, 50.0)),
        ),
        remainder="p3",
    )


class TestValidate:
    def test_room_network_valid(self):
        assert validate(room_network(5)) == []

    def test_full_wiring_valid(self):
        # two-node complete graph, scalar states
        subs = []
        for name, other in (("a", "b"), ("b", "a")):
            v, w, s = f"x_{name}", f"w_{name}", f"s_{name}"
            subs.append(
                Subsystem(
                    sid=name,
                    state_vars=(v,),
                    state_box=Box({v: (0.0, 1.0)}),
                    dynamics=(P(f"0.5*{v} + 0.1*{w} + 0.01*{s}"),),
                    noise=NoiseModel.gaussian(1.0),
                    noise_vars=(s,),
                    internal_vars=(w,),
                    internal_box=Box({w: (0.0, 1.0)}),
                    outputs={other: (Polynomial.variable(v),)},
                )
            )
        inter = Interconnection(tuple(subs), {("a", "b"): ("w_a",), ("b", "a"): ("w_b",)})
        assert validate(inter) == []

    def test_dimension_mismatch_diagnosed(self):
        inter = room_network(3)
        bad_wiring = dict(inter.wiring)
        # bind a 1-dim output block to 2 internal slots
        bad_wiring[("room0", "room2")] = ("wl_0", "wr_0")
        del bad_wiring[("room0", "room1")]
        diags = validate(Interconnection(inter.subsystems, bad_wiring))
        assert any("dimension" in d for d in diags)

    def test_range_violation_diagnosed(self):
        inter = room_network(3)
        sub0 = inter.subsystems[0]
        shrunk = Subsystem(
            sid=sub0.sid,
            state_vars=sub0.state_vars,
            state_box=sub0.state_box,
            dynamics=sub0.dynamics,
            noise=sub0.noise,
            noise_vars=sub0.noise_vars,
            input_vars=sub0.input_vars,
            input_box=sub0.input_box,
            internal_vars=sub0.internal_vars,
            internal_box=Box({"wl_0": (1.0, 10.0), "wr_0": (1.0, 50.0)}),
            outputs=sub0.outputs,
        )
        diags = validate(Interconnection((shrunk,) + inter.subsystems[1:], inter.wiring))
        assert any("exceeds" in d for d in diags)


class TestLabel:
    def test_room_regions(self):
        inter = room_network(3)
        regions = room_regions(3)
        mk = lambda v: {f"T_{i}": v for i in range(3)}
        assert label(regions, mk(19.7), inter) == "p0"
        assert label(regions, mk(30.0), inter) == "p2"
        assert label(regions, mk(22.0), inter) == "p3"

    def test_outside_state_box(self):
        inter = room_network(3)
        regions = room_regions(3)
        state = {f"T_{i}": 60.0 for i in range(3)}
        with pytest.raises(ValueError, match="outside"):
            label(regions, state, inter)
        assert label(regions, state, inter, allow_outside=True) == "p3"

    def test_first_match_on_boundary(self):
        inter = room_network(3)
        entries = room_regions(3).entries
        # duplicate boundary 17.0 belongs to whichever region is listed first
        regions = LabeledRegions(entries=entries, remainder="p3")
        state = {f"T_{i}": 17.0 for i in range(3)}
        assert label(regions, state, inter) == "p1"

    def test_disjointness_validation(self):
        inter = room_network(2)
        overlapping = LabeledRegions(
            entries=(
                ("p0", {f"room{i}": Box({f"T_{i}": (10.0, 20.0)}) for i in range(2)}),
                ("p1", {f"room{i}": Box({f"T_{i}": (15.0, 25.0)}) for i in range(2)}),
            ),
            remainder="p2",
        )
        assert overlapping.validate(inter)
        assert room_regions(2).validate(inter) == []


class TestStep:
    def test_identity_dynamics(self):
        v = Polynomial.variable("x_a")
        sub = Subsystem(
            sid="a",
            state_vars=("x_a",),
            state_box=Box({"x_a": (-10.0, 10.0)}),
            dynamics=(v,),
            noise=NoiseModel.gaussian(1.0),
        )
        inter = Interconnection((sub,), {})
        out = step(inter, {"x_a": 3.5}, {}, np.random.default_rng(0))
        assert out == {"x_a": 3.5}

    def test_zero_noise_room_hand_oracle(self):
        # hand evaluation with the paper controller at T = 20, all rooms equal:
        #   0.93*20 + 6.525*(-0.012*20 + 0.8) + 0.005*(20 + 20) - 0.9
        n = 3
        subs = []
        for i in range(n):
            s = room_subsystem(i, n)
            zero_noise = Subsystem(
                sid=s.sid,
                state_vars=s.state_vars,
                state_box=s.state_box,
                dynamics=tuple(p.substitute({f"s_{i}": 0.0}) for p in s.dynamics),
                noise=s.noise,
                input_vars=s.input_vars,
                input_box=s.input_box,
                internal_vars=s.internal_vars,
                internal_box=s.internal_box,
                outputs=s.outputs,
            )
            subs.append(zero_noise)
        inter = Interconnection(tuple(subs), room_network(n).wiring)
        x = {f"T_{i}": 20.0 for i in range(n)}
        u = {f"u_{i}": -0.012 * 20.0 + 0.8 for i in range(n)}
        expected = 0.93 * 20.0 + 6.525 * (-0.012 * 20.0 + 0.8) + 0.005 * 40.0 - 0.9
        out = step(inter, x, u, np.random.default_rng(0))
        for i in range(n):
            assert out[f"T_{i}"] == pytest.approx(expected, abs=1e-12)

    def test_synchronous_semantics(self):
        # chain a -> b: b's internal input reads a's state at time k
        pa = P("0.0*x_a + 1.0")
        sub_a = Subsystem(
            sid="a",
            state_vars=("x_a",),
            state_box=Box({"x_a": (-10.0, 10.0)}),
            dynamics=(pa,),
            noise=NoiseModel.gaussian(1.0),
            outputs={"b": (Polynomial.variable("x_a"),)},
        )
        sub_b = Subsystem(
            sid="b",
            state_vars=("x_b",),
            state_box=Box({"x_b": (-10.0, 10.0)}),
            dynamics=(Polynomial.variable("w_b"),),
            noise=NoiseModel.gaussian(1.0),
            internal_vars=("w_b",),
            internal_box=Box({"w_b": (-10.0, 10.0)}),
        )
        inter = Interconnection((sub_a, sub_b), {("b", "a"): ("w_b",)})
        out = step(inter, {"x_a": 7.0, "x_b": 0.0}, {}, np.random.default_rng(0))
        assert out["x_b"] == 7.0  # time-k value, not the updated 1.0
        assert out["x_a"] == 1.0

    def test_seeded_reproducibility(self):
        inter = room_network(4)
        x = {f"T_{i}": 19.75 for i in range(4)}
        u = {f"u_{i}": 0.5 for i in range(4)}
        a = step(inter, x, u, np.random.default_rng(42))
        b = step(inter, x, u, np.random.default_rng(42))
        assert a == b

    def test_unbound_internal_is_zero(self):
        sub = Subsystem(
            sid="a",
            state_vars=("x_a",),
            state_box=Box({"x_a": (-10.0, 10.0)}),
            dynamics=(P("x_a + w_a"),),
            noise=NoiseModel.gaussian(1.0),
            internal_vars=("w_a",),
            internal_box=Box({"w_a": (-1.0, 1.0)}),
        )
        inter = Interconnection((sub,), {})
        out = step(inter, {"x_a": 2.0}, {}, np.random.default_rng(0))
        assert out["x_a"] == 2.0

    def test_step_plan_matches_step_zero_noise(self):
        n = 4
        subs = []
        for i in range(n):
            s = room_subsystem(i, n)
            subs.append(
                Subsystem(
                    sid=s.sid,
                    state_vars=s.state_vars,
                    state_box=s.state_box,
                    dynamics=tuple(p.substitute({f"s_{i}": 0.0}) for p in s.dynamics),
                    noise=s.noise,
                    input_vars=s.input_vars,
                    input_box=s.input_box,
                    internal_vars=s.internal_vars,
                    internal_box=s.internal_box,
                    outputs=s.outputs,
                )
            )
        inter = Interconnection(tuple(subs), room_network(n).wiring)
        x = {f"T_{i}": 18.0 + i for i in range(n)}
        u = {f"u_{i}": 0.3 for i in range(n)}
        plain = step(inter, x, u, np.random.default_rng(0))
        plan = StepPlan(inter)
        fast = plan.step(x, u, np.random.default_rng(0))
        for v in plain:
            assert fast[v] == pytest.approx(plain[v], rel=1e-12)


class TestCloseLoop:
    def test_room_controller_substitution(self):
        sub = room_subsystem(0, 3)
        closed = close_loop(sub, (P("-0.012*T_0 + 0.8"),))
        assert closed.input_vars == ()
        # closed dynamics: (0.93 - 6.525*0.012) T + 0.005 w1 + 0.005 w2 + (6.525*0.8 - 0.9) + 0.1 s
        expected = P(
            f"{ROOM_ABAR - ROOM_GAIN * 0.012}*T_0 + 0.005*wl_0 + 0.005*wr_0"
            f" + {ROOM_GAIN * 0.8 + ROOM_BIAS} + 0.1*s_0"
        )
        assert closed.dynamics[0].approx_equal(expected, tol=1e-12)

    def test_zero_controller(self):
        sub = room_subsystem(0, 3)
        closed = close_loop(sub, (Polynomial.zero(),))
        point = {"T_0": 20.0, "wl_0": 20.0, "wr_0": 20.0, "s_0": 0.0}
        assert closed.dynamics[0](point) == pytest.approx(0.93 * 20 + 0.005 * 40 - 0.9)

    def test_kuramoto_quadratic_controller(self):
        th, w, u, s = "th_0", "wk_0", "u_0", "s_0"
        sub = Subsystem(
            sid="osc0",
            state_vars=(th,),
            state_box=Box({th: (0.0, 6.2832)}),
            dynamics=(P(f"{th} + 0.001 + {u} + 0.05*{s}"),),
            noise=NoiseModel.gaussian(1.0),
            noise_vars=(s,),
            input_vars=(u,),
            input_box=Box({u: (-25.0, 5.0)}),
            internal_vars=(w,),
            internal_box=Box({w: (0.0, 6.2832)}),
        )
        closed = close_loop(sub, (P(f"-0.532*{th}^2 + 1.69"),))
        assert closed.dynamics[0].degree_in(th) == 2

    def test_controller_dimension_checked(self):
        sub = room_subsystem(0, 3)
        with pytest.raises(ValueError, match="coordinates"):
            close_loop(sub, ())

    def test_controller_over_non_state_rejected(self):
        sub = room_subsystem(0, 3)
        with pytest.raises(ValueError, match="non-state"):
            close_loop(sub, (P("wl_0"),))
