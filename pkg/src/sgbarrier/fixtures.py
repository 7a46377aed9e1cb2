"""Built-in problem configurations and published certificates.

Two physical case studies ship with the toolkit: a circular building of
heat-coupled rooms and a fully connected network of phase oscillators,
plus a small DFA-only decomposition example.  All builders return plain
JSON-compatible dicts in the documented config schema.

The room model here uses the constant-leakage per-room form
  T+ = a*T + g*u + e*(w_left + w_right) + b + 0.1*s,  a = 1 - 2e - iota
(the input enters only additively).  The oscillator model replaces the
bounded sinusoidal coupling by its worst-case constant, which is what
the published certificates were computed against; the full coupling is
not polynomial.
"""

from __future__ import annotations

import math

# room parameters: conduction to neighbours, environment, heater
ROOM_EPS = 0.005
ROOM_IOTA = 0.06
ROOM_MU = 0.145
ROOM_TH = 45.0
ROOM_TE = -15.0
ROOM_ABAR = 1.0 - 2.0 * ROOM_EPS - ROOM_IOTA
ROOM_GAIN = ROOM_MU * ROOM_TH
ROOM_BIAS = ROOM_IOTA * ROOM_TE

# oscillator parameters
OSC_OMEGA = 0.01
OSC_K = 0.0012
OSC_TAU = 0.1
TWO_PI = 2.0 * math.pi


def room_config(n_rooms: int = 1000, seed: int = 2024) -> dict:
    """Temperature regulation in a circular building."""
    dyn = (
        f"{ROOM_ABAR}*T + {ROOM_GAIN}*u + {ROOM_EPS}*wl + {ROOM_EPS}*wr"
        f" + {ROOM_BIAS} + 0.1*s"
    )
    return {
        "name": f"room_network_{n_rooms}",
        "subsystems": {
            "template": {
                "id": "room",
                "state": {"T": [1.0, 50.0]},
                "input": {"u": [0.0, 1.0]},
                "internal": {"wl": [1.0, 50.0], "wr": [1.0, 50.0]},
                "dynamics": {"T": dyn},
                "noise_vars": ["s"],
            },
            "count": n_rooms,
        },
        "wiring": {"pattern": "circular"},
        "noise": {"type": "gaussian", "sigma": 1.0, "max_moment": 12},
        "regions": [
            {"prop": "p0", "box": {"T": [19.5, 20.0]}},
            {"prop": "p1", "box": {"T": [1.0, 17.0]}},
            {"prop": "p2", "box": {"T": [23.0, 50.0]}},
            {"prop": "p3", "remainder": True},
        ],
        "dfa": {
            "states": ["q0", "q1", "q2"],
            "initial": "q0",
            "accepting": ["q0", "q1"],
            "transitions": [
                ["q0", "p0", "q1"],
                ["q0", "p1", "q2"],
                ["q0", "p2", "q2"],
                ["q0", "p3", "q2"],
                ["q1", "p0", "q1"],
                ["q1", "p3", "q1"],
                ["q1", "p1", "q2"],
                ["q1", "p2", "q2"],
                ["q2", "p0", "q2"],
                ["q2", "p1", "q2"],
                ["q2", "p2", "q2"],
                ["q2", "p3", "q2"],
            ],
        },
        "horizon": {"M": 10},
        "templates": {"barrier_degree": 2, "controller_degree": 1},
        "gains": {
            "kappa_bar_grid": [0.9, 0.95, 0.99],
            "alpha": 5e-05,
            "rho_bar_grid": [1e-06, 1e-05, 1e-04],
            "conversion": {"theta": 0.5, "theta_bar": 2.0, "d": 1.0},
        },
        "modes": {"bound": "paper_compat", "verify": "sampled"},
        "seeds": {"master": seed},
        "simulation": {"trajectories": 10000, "confidence": 0.02, "start": "p0"},
    }


def kuramoto_config(n_oscillators: int = 100, seed: int = 2024) -> dict:
    """Fully connected phase-oscillator network with bounded coupling."""
    coupling = OSC_K * OSC_TAU * (n_oscillators - 1) / n_oscillators
    dyn = f"th + {OSC_TAU * OSC_OMEGA} + {coupling} + u + 0.05*s"
    pi = math.pi
    props = [f"p{i}" for i in range(7)]
    transitions = []
    for p in props:
        transitions.append(["q0", p, {"p1": "q1", "p4": "q2"}.get(p, "q3")])
        transitions.append(["q1", p, "q3" if p in ("p0", "p2") else "q1"])
        transitions.append(["q2", p, "q3" if p in ("p3", "p5") else "q2"])
        transitions.append(["q3", p, "q3"])
    return {
        "name": f"kuramoto_network_{n_oscillators}",
        "subsystems": {
            "template": {
                "id": "osc",
                "state": {"th": [0.0, TWO_PI]},
                "input": {"u": [-25.0, 5.0]},
                "internal": {"pattern": "full", "box": [0.0, TWO_PI], "prefix": "w"},
                "dynamics": {"th": dyn},
                "noise_vars": ["s"],
            },
            "count": n_oscillators,
        },
        "wiring": {"pattern": "full"},
        "noise": {"type": "gaussian", "sigma": 1.0, "max_moment": 12},
        "regions": [
            {"prop": "p0", "box": {"th": [0.0, pi / 15]}},
            {"prop": "p1", "box": {"th": [4 * pi / 9, 5 * pi / 9]}},
            {"prop": "p2", "box": {"th": [14 * pi / 15, pi]}},
            {"prop": "p3", "box": {"th": [pi, 16 * pi / 15]}},
            {"prop": "p4", "box": {"th": [13 * pi / 9, 14 * pi / 9]}},
            {"prop": "p5", "box": {"th": [29 * pi / 15, TWO_PI]}},
            {"prop": "p6", "remainder": True},
        ],
        # the spec automaton: complement of the violation automaton below
        "dfa": {
            "states": ["q0", "q1", "q2", "q3"],
            "initial": "q0",
            "accepting": ["q0", "q1", "q2"],
            "transitions": transitions,
        },
        "horizon": {"M": 7},
        "templates": {"barrier_degree": 8, "controller_degree": 2},
        "gains": {
            "kappa_bar_grid": [0.95, 0.99],
            "alpha": 4.5e-07,
            "rho_bar_grid": [1e-08, 1e-07],
            "conversion": {"theta": 0.5, "theta_bar": 2.0, "d": 1.0},
        },
        "modes": {"bound": "paper_compat", "verify": "sampled"},
        "seeds": {"master": seed},
        "simulation": {"trajectories": 10000, "confidence": 0.02, "start": "p1"},
    }


def example_dfa_config() -> dict:
    """Decomposition-only example: six states, four propositions.

    The accepting state of the complement automaton absorbs, so the
    enumerated run sets match the worked example exactly.
    """
    t = []

    def arcs(q, mapping):
        for p, q2 in mapping.items():
            t.append([q, p, q2])

    arcs("q0", {"p0": "q1", "p1": "q5", "p2": "q3", "p3": "q5"})
    arcs("q1", {"p0": "q1", "p1": "q2", "p2": "q1", "p3": "q1"})
    arcs("q2", {"p0": "q2", "p1": "q2", "p2": "q2", "p3": "q5"})
    arcs("q3", {"p0": "q4", "p1": "q5", "p2": "q3", "p3": "q3"})
    arcs("q4", {"p0": "q4", "p1": "q4", "p2": "q4", "p3": "q5"})
    arcs("q5", {"p0": "q5", "p1": "q5", "p2": "q5", "p3": "q5"})
    return {
        "name": "decomposition_example",
        "dfa": {
            "states": ["q0", "q1", "q2", "q3", "q4", "q5"],
            "initial": "q0",
            "accepting": ["q0", "q1", "q2", "q3", "q4"],
            "transitions": t,
        },
        "horizon": {"M": 4},
    }


def paper_room_certificates() -> dict:
    """Published certificate set for the room network (template form)."""
    return {
        "name": "paper_room",
        "certificates": [
            {
                "partition": {"source": "q0", "via": "q1"},
                "template": {
                    "barrier": "0.7659*T^2 - 30.24*T + 298.5",
                    "controller": ["-0.012*T + 0.8"],
                    "eta": 0.13,
                    "beta": 4.4,
                    "c": 0.0139,
                    "alpha": 5e-05,
                    "kappa": 0.99,
                    "rho": 4.99e-05,
                    "initial": [{"T": [19.5, 20.0]}],
                    "unsafe": [{"T": [1.0, 17.0]}, {"T": [23.0, 50.0]}],
                },
            }
        ],
    }


def paper_kuramoto_certificates() -> dict:
    """Published certificate sets for both oscillator partitions."""
    pi = math.pi
    b1 = (
        "0.001361*th^8 - 0.0001877*th^7 + 0.0004904*th^6 - 0.03395*th^5"
        " + 0.00107*th^4 - 0.1927*th^3 + 1.71*th^2 - 3.205*th + 1.827"
    )
    return {
        "name": "paper_kuramoto",
        "certificates": [
            {
                "partition": {"source": "q0", "via": "q1"},
                "template": {
                    "barrier": b1,
                    "controller": ["-0.532*th^2 + 1.69"],
                    "eta": 0.02,
                    "beta": 1.2,
                    "c": 0.0083,
                    "alpha": 4.5e-07,
                    "kappa": 0.997,
                    "rho": 4.49e-07,
                    "initial": [{"th": [4 * pi / 9, 5 * pi / 9]}],
                    "unsafe": [{"th": [0.0, pi / 15]}, {"th": [14 * pi / 15, pi]}],
                },
            },
            {
                "partition": {"source": "q0", "via": "q2"},
                "template": {
                    "barrier": "0.5396*th^2 - 5.086*th + 11.86",
                    "controller": ["-0.21*th^2 + 4.6591"],
                    "eta": 0.017,
                    "beta": 1.0,
                    "c": 0.0162,
                    "alpha": 4.5e-08,
                    "kappa": 0.998,
                    "rho": 4.49e-08,
                    "initial": [{"th": [13 * pi / 9, 14 * pi / 9]}],
                    "unsafe": [{"th": [pi, 16 * pi / 15]}, {"th": [29 * pi / 15, TWO_PI]}],
                },
            },
        ],
    }


BUILTIN_CONFIGS = {
    "room": room_config,
    "kuramoto": kuramoto_config,
    "dfa-example": lambda **kw: example_dfa_config(),
}

BUILTIN_CERTIFICATES = {
    "paper_room": paper_room_certificates,
    "paper_kuramoto": paper_kuramoto_certificates,
}
