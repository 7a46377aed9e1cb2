"""Small-gain composition tests.

Cycle checks are cross-validated against brute-force enumeration, and
the composed drift bound is exercised on a two-subsystem toy where the
expectation of the max is computed by Gauss-Hermite quadrature.
"""

import itertools
import math
import time

import numpy as np
import pytest

from sgbarrier.certify import (
    CsbcRecord,
    LinearGain,
    PolynomialController,
    VerifyMode,
    expected_barrier,
    verify_cbc,
)
from sgbarrier.compose import (
    CompositionError,
    GainMatrix,
    SmallGainResult,
    compose_cbc,
    gain_matrix,
    small_gain_check,
    solve_scaling,
)
from sgbarrier.poly import Box, NoiseModel, Polynomial, parse_poly
from sgbarrier.system import Interconnection, Subsystem, close_loop

P = parse_poly


def record(sid, var, kappa=0.99, alpha=5e-5, rho=4.99e-5, eta=0.13, beta=4.4, c=0.0139):
    return CsbcRecord(
        subsystem_id=sid,
        barrier=P(f"{var}^2"),
        controller=PolynomialController(()),
        eta=eta,
        beta=beta,
        c=c,
        alpha=LinearGain(alpha),
        kappa=LinearGain(kappa),
        rho=LinearGain(rho),
        initial=(Box({var: (-0.1, 0.1)}),),
        unsafe=(Box({var: (0.9, 1.0)}),),
    )


def circular_pairs(n):
    return tuple(
        sorted({(i, (i - 1) % n) for i in range(n)} | {(i, (i + 1) % n) for i in range(n)})
    )


def matrix(entries) -> GainMatrix:
    slopes = np.array(entries, dtype=float)
    return GainMatrix(slopes=slopes, ids=tuple(f"s{i}" for i in range(len(entries))))


def brute_force_cycle_products(G: GainMatrix):
    """Independent oracle: products over all simple cycles."""
    n = G.n
    out = []
    for length in range(1, n + 1):
        for nodes in itertools.permutations(range(n), length):
            if nodes[0] != min(nodes):
                continue
            product = 1.0
            ok = True
            for a, b in zip(nodes, nodes[1:] + (nodes[0],)):
                if G.slopes[a, b] <= 0:
                    ok = False
                    break
                product *= G.slopes[a, b]
            if ok:
                out.append((nodes, product))
    return out


class TestGainMatrix:
    def test_room_ratios(self):
        records = [record(f"room_{i}", f"T_{i}") for i in range(5)]
        G = gain_matrix(records, circular_pairs(5))
        assert np.allclose(np.diag(G.slopes), 0.99)
        for i in range(5):
            for j in range(5):
                if i == j:
                    continue
                expected = 4.99e-5 / 5e-5 if (i, j) in circular_pairs(5) else 0.0
                assert G.slopes[i, j] == pytest.approx(expected)

    def test_zero_rho_gives_diagonal(self):
        records = [record(f"s{i}", f"x_{i}", rho=0.0) for i in range(4)]
        G = gain_matrix(records, None)
        assert np.allclose(G.slopes, np.diag([0.99] * 4))

    def test_kuramoto_ratio(self):
        records = [
            record(f"o{i}", f"th_{i}", kappa=0.997, alpha=4.5e-7, rho=4.49e-7) for i in range(4)
        ]
        G = gain_matrix(records, None)
        off = G.slopes[0, 1]
        assert off == pytest.approx(4.49e-7 / 4.5e-7)
        assert 0.997 < off < 0.998


class TestSmallGain:
    def test_room_holds_every_entry_below_one(self):
        records = [record(f"room_{i}", f"T_{i}") for i in range(6)]
        G = gain_matrix(records, circular_pairs(6))
        assert float(G.slopes.max()) < 1.0
        assert small_gain_check(G).holds

    def test_two_cycle_violation(self):
        G = matrix([[0.5, 1.1], [1.1, 0.5]])
        result = small_gain_check(G)
        assert not result.holds
        assert result.worst_product == pytest.approx(1.21)
        assert set(result.worst_cycle) == {"s0", "s1"}

    def test_three_cycle_with_large_entry_still_holds(self):
        # product oracle: 0.5 * 0.5 * 3.9 = 0.975 < 1
        G = matrix(
            [
                [0.1, 0.5, 0.0],
                [0.0, 0.1, 0.5],
                [3.9, 0.0, 0.1],
            ]
        )
        assert 0.5 * 0.5 * 3.9 == pytest.approx(0.975)
        assert small_gain_check(G).holds

    def test_diagonal_unit_cycle_violation(self):
        with pytest.raises(ValueError, match="diagonal"):
            matrix([[1.0]])

    def test_brute_force_cross_check(self):
        rng = np.random.default_rng(31)
        for trial in range(60):
            n = int(rng.integers(2, 7))
            slopes = np.where(rng.random((n, n)) < 0.6, rng.uniform(0.05, 1.4, (n, n)), 0.0)
            np.fill_diagonal(slopes, rng.uniform(0.1, 0.99, n))
            G = GainMatrix(slopes=slopes, ids=tuple(f"s{i}" for i in range(n)))
            worst = max(p for _, p in brute_force_cycle_products(G))
            assert small_gain_check(G).holds == (worst < 1.0)

    def test_karp_path_cross_check(self):
        # force the minimum-mean-cycle path by exceeding the brute limit
        from sgbarrier.compose import _BRUTE_CYCLE_LIMIT, _karp_min_mean

        rng = np.random.default_rng(7)
        n = _BRUTE_CYCLE_LIMIT + 4
        slopes = np.zeros((n, n))
        np.fill_diagonal(slopes, 0.5)
        for i in range(n):
            slopes[i, (i + 1) % n] = 1.04  # ring with product 1.04^n > 1
        G = GainMatrix(slopes=slopes, ids=tuple(f"s{i}" for i in range(n)))
        result = small_gain_check(G)
        assert not result.holds
        assert result.worst_product > 1.0

    def test_thousand_rooms_under_a_second(self):
        records = [record(f"room_{i}", f"T_{i}") for i in range(1000)]
        t0 = time.perf_counter()
        G = gain_matrix(records, circular_pairs(1000))
        result = small_gain_check(G)
        lambdas = solve_scaling(G)
        elapsed = time.perf_counter() - t0
        assert result.holds and np.all(lambdas == 1.0)
        assert elapsed < 1.0, f"took {elapsed:.3f}s"


class TestSolveScaling:
    def test_identity_when_all_below_one(self):
        records = [record(f"room_{i}", f"T_{i}") for i in range(8)]
        G = gain_matrix(records, circular_pairs(8))
        assert np.all(solve_scaling(G) == 1.0)

    def test_rebalancing_example(self):
        # feasibility oracle: need lambda_2/lambda_1 < 1/2 and
        # lambda_1/lambda_2 < 10
        G = matrix([[0.5, 2.0], [0.1, 0.5]])
        lam = solve_scaling(G)
        assert lam[1] / lam[0] < 0.5
        assert lam[0] / lam[1] < 10.0
        scaled = G.slopes * lam[None, :] / lam[:, None]
        mask = G.slopes > 0
        assert scaled[mask].max() < 1.0

    def test_infeasible_raises(self):
        G = matrix([[0.5, 1.1], [1.1, 0.5]])
        with pytest.raises(CompositionError):
            solve_scaling(G)

    def test_random_feasible_instances(self):
        rng = np.random.default_rng(11)
        done = 0
        while done < 20:
            n = int(rng.integers(2, 6))
            slopes = np.where(rng.random((n, n)) < 0.5, rng.uniform(0.1, 1.6, (n, n)), 0.0)
            np.fill_diagonal(slopes, rng.uniform(0.1, 0.95, n))
            G = GainMatrix(slopes=slopes, ids=tuple(f"s{i}" for i in range(n)))
            if not small_gain_check(G).holds:
                continue
            lam = solve_scaling(G)
            scaled = G.slopes * lam[None, :] / lam[:, None]
            assert scaled[G.slopes > 0].max() < 1.0
            done += 1


class TestComposeCbc:
    def test_room_composite_constants(self):
        records = [record(f"room_{i}", f"T_{i}") for i in range(5)]
        comp = compose_cbc(records, np.ones(5), circular_pairs(5))
        assert comp.eta == 0.13
        assert comp.beta == 4.4
        assert comp.c == 0.0139
        assert comp.kappa_hat == pytest.approx(0.998)

    def test_single_subsystem(self):
        rec = record("solo", "x")
        comp = compose_cbc([rec], [1.0], ())
        assert comp.kappa_hat == rec.kappa.slope
        assert comp.eta == rec.eta and comp.beta == rec.beta and comp.c == rec.c

    def test_heterogeneous_brute_force(self):
        rng = np.random.default_rng(5)
        for _ in range(20):
            n = int(rng.integers(2, 5))
            records = [
                record(
                    f"s{i}",
                    f"x_{i}",
                    kappa=float(rng.uniform(0.2, 0.95)),
                    alpha=float(rng.uniform(0.5, 2.0)),
                    rho=float(rng.uniform(0.0, 0.4)),
                    eta=float(rng.uniform(0.0, 0.5)),
                    beta=float(rng.uniform(2.0, 5.0)),
                    c=float(rng.uniform(0.0, 0.2)),
                )
                for i in range(n)
            ]
            lam = rng.uniform(0.5, 2.0, n)
            pairs = tuple((i, j) for i in range(n) for j in range(n) if i != j)
            scaled_worst = max(
                max(r.kappa.slope for r in records),
                max(
                    records[i].rho.slope / records[j].alpha.slope * lam[j] / lam[i]
                    for i, j in pairs
                ),
            )
            if scaled_worst >= 1.0:
                with pytest.raises(CompositionError):
                    compose_cbc(records, lam, pairs)
                continue
            comp = compose_cbc(records, lam, pairs)
            assert comp.eta == pytest.approx(max(r.eta / l for r, l in zip(records, lam)))
            assert comp.beta == pytest.approx(max(r.beta / l for r, l in zip(records, lam)))
            assert comp.c == pytest.approx(max(r.c / l for r, l in zip(records, lam)))
            expected_kappa = max(
                max(r.kappa.slope for r in records),
                max(
                    records[i].rho.slope / records[j].alpha.slope * lam[j] / lam[i]
                    for i, j in pairs
                ),
            )
            assert comp.kappa_hat == pytest.approx(expected_kappa)

    def test_rejects_closed_level_gap(self):
        # max-scaled eta (3.0) reaches the max-scaled beta (2.9): rejected
        records = [record("a", "x_a", eta=3.0, beta=2.5), record("b", "x_b", eta=0.1, beta=2.9)]
        with pytest.raises(CompositionError, match="beta"):
            compose_cbc(records, [1.0, 1.0], ((0, 1), (1, 0)))

    def test_scaling_invariance_of_verdicts(self):
        records = [record(f"s{i}", f"x_{i}") for i in range(4)]
        pairs = circular_pairs(4)
        base = compose_cbc(records, np.ones(4), pairs)
        scaled = compose_cbc(records, np.ones(4) * 3.7, pairs)
        assert scaled.kappa_hat == pytest.approx(base.kappa_hat)
        assert (scaled.beta > scaled.eta) == (base.beta > base.eta)
        assert scaled.beta / scaled.eta == pytest.approx(base.beta / base.eta)


# ---------------------------------------------------------------------
# two-subsystem toy with exactly computable expectations


TOY_A, TOY_B, TOY_SIGMA = 0.3, 0.05, 0.03
TOY_KAPPA, TOY_RHO, TOY_C = 0.5, 0.02, 0.002


def two_subsystem_toy():
    """Wired pair whose drift condition holds globally with real margins.

    E[B(next)] = (0.3 x + 0.05 w)^2 + 0.0009 is covered by 0.5 x^2 for
    x away from zero, by 0.02 w^2 for dominant w, and by c = 0.002 in
    the remaining corner near the origin.
    """
    subs = []
    records = []
    for name, other in (("a", "b"), ("b", "a")):
        x, w, s = f"x_{name}", f"w_{name}", f"s_{name}"
        sub = Subsystem(
            sid=name,
            state_vars=(x,),
            state_box=Box({x: (-1.0, 1.0)}),
            dynamics=(P(f"{TOY_A}*{x} + {TOY_B}*{w} + {TOY_SIGMA}*{s}"),),
            noise=NoiseModel.gaussian(1.0),
            noise_vars=(s,),
            internal_vars=(w,),
            internal_box=Box({w: (-1.0, 1.0)}),
            outputs={other: (Polynomial.variable(x),)},
        )
        subs.append(sub)
        records.append(
            CsbcRecord(
                subsystem_id=name,
                barrier=P(f"{x}^2"),
                controller=PolynomialController(()),
                eta=0.002,
                beta=0.8,
                c=TOY_C,
                alpha=LinearGain(1.0),
                kappa=LinearGain(TOY_KAPPA),
                rho=LinearGain(TOY_RHO),
                initial=(Box({x: (-0.04, 0.04)}),),
                unsafe=(Box({x: (-1.0, -0.9)}), Box({x: (0.9, 1.0)})),
            )
        )
    inter = Interconnection(tuple(subs), {("a", "b"): ("w_a",), ("b", "a"): ("w_b",)})
    return inter, records


class TestComposedDriftChain:
    def test_sampled_chain_on_wired_toy(self):
        # wherever both members satisfy their own drift condition at a point
        # with wired internal inputs, the composite max-of-expectations
        # satisfies the composed bound; the expectation of the max exceeds
        # that surrogate only by the (measured, small) Jensen gap
        inter, records = two_subsystem_toy()
        comp = compose_cbc(records, np.ones(2), ((0, 1), (1, 0)))
        e_polys = {}
        for rec in records:
            sub = inter.subsystem(rec.subsystem_id)
            closed = close_loop(sub, rec.controller.polys)
            e_polys[rec.subsystem_id] = expected_barrier(rec.barrier, closed)

        nodes, weights = np.polynomial.hermite_e.hermegauss(48)
        weights = weights / weights.sum()

        rng = np.random.default_rng(20)
        checked = 0
        max_jensen_gap = 0.0
        for _ in range(400):
            xa, xb = rng.uniform(-1, 1, 2)
            point = {"x_a": xa, "w_a": xb, "x_b": xb, "w_b": xa}
            member_ok = True
            e_vals = {}
            for rec in records:
                e = e_polys[rec.subsystem_id](point)
                b = rec.barrier(point)
                wsq = point[f"w_{rec.subsystem_id}"] ** 2
                e_vals[rec.subsystem_id] = e
                if e > max(TOY_KAPPA * b, TOY_RHO * wsq, TOY_C) + 1e-12:
                    member_ok = False
            if not member_ok:
                continue
            checked += 1
            composite_b = comp.evaluate({"x_a": xa, "x_b": xb})
            surrogate = max(e_vals.values())
            bound = max(comp.kappa_hat * composite_b, comp.c)
            assert surrogate <= bound + 1e-9
            # exact E[max] by product quadrature over the two noises
            ga = (TOY_A * xa + TOY_B * xb + TOY_SIGMA * nodes) ** 2
            gb = (TOY_A * xb + TOY_B * xa + TOY_SIGMA * nodes) ** 2
            e_max = float(weights @ np.maximum.outer(ga, gb) @ weights)
            gap = e_max - surrogate
            assert gap >= -1e-9
            max_jensen_gap = max(max_jensen_gap, gap)
        assert checked > 100
        # first-order gap bound: ~ 2 * max|mean| * sigma of the noise term
        assert max_jensen_gap < 2 * 0.35 * TOY_SIGMA + 0.002

    def test_verify_cbc_sampled_and_rigorous_agree(self):
        inter, records = two_subsystem_toy()
        comp = compose_cbc(records, np.ones(2), ((0, 1), (1, 0)))
        sampled = verify_cbc(comp, inter, VerifyMode(kind="sampled", samples=20_000, seed=4))
        rigorous = verify_cbc(
            comp, inter, VerifyMode(kind="rigorous", samples=2000, budget=400_000, seed=4)
        )
        assert sampled.ok, sampled.to_dict()
        assert rigorous.ok, rigorous.to_dict()
        assert rigorous.conditions["drift"].status in ("verified", "passed")

    def test_verify_cbc_rejects_closed_gap(self):
        inter, records = two_subsystem_toy()
        bad = [
            CsbcRecord(
                subsystem_id=r.subsystem_id,
                barrier=r.barrier,
                controller=r.controller,
                eta=0.9,
                beta=0.8,
                c=r.c,
                alpha=r.alpha,
                kappa=r.kappa,
                rho=r.rho,
                initial=r.initial,
                unsafe=r.unsafe,
            )
            for r in records
        ]
        with pytest.raises(CompositionError):
            compose_cbc(bad, np.ones(2), ((0, 1), (1, 0)))
