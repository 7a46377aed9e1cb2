"""Problem configuration loading and network instancing.

A config is a JSON-compatible dict with sections `subsystems`,
`wiring`, `noise`, `regions`, `dfa`, `horizon`, `templates`, `gains`,
`modes`, `seeds`, `simulation`; see the README for the exact field
names.  Homogeneous networks are declared once as a template plus a
count and a wiring pattern (`circular` or `full`); the loader instances
subsystem i by renaming every template variable v to ``v_i``.

For the `full` pattern the template subsystem keeps a single
representative internal coordinate: instanced subsystems receive one
internal input per peer, but templates are only used for per-subsystem
synthesis and verification, where all internal coordinates share one
box and the drift condition depends on them symmetrically.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

from .automata import Dfa
from .poly import Box, NoiseModel, Polynomial, parse_poly
from .system import Interconnection, LabeledRegions, Subsystem


class ConfigError(ValueError):
    """Malformed or inconsistent problem configuration."""


def _require(data: Mapping, key: str, where: str):
    if key not in data:
        raise ConfigError(f"missing config section {key!r} in {where}")
    return data[key]


def _noise_model(section: Mapping | None) -> NoiseModel:
    if section is None:
        return NoiseModel.gaussian(1.0)
    kind = section.get("type", "gaussian")
    if kind == "gaussian":
        return NoiseModel.gaussian(
            sigma=section.get("sigma", 1.0), max_order=int(section.get("max_moment", 12))
        )
    if kind == "moments":
        return NoiseModel(section["moments"])
    raise ConfigError(f"unknown noise type {kind!r}")


def _box_from(entry: Mapping) -> Box:
    return Box({v: (lo, hi) for v, (lo, hi) in entry.items()})


def _parse_input_section(section: Mapping | None):
    """Returns (input_vars, input_box, input_values)."""
    if not section:
        return (), None, ()
    names = tuple(section)
    first = section[names[0]]
    if isinstance(first, Mapping) or (isinstance(first, dict)):
        values = section[names[0]]["values"]
        grid = tuple((float(v),) if not isinstance(v, (list, tuple)) else tuple(v) for v in values)
        if len(names) != 1:
            raise ConfigError("finite input sets support a single declared entry")
        return names, None, grid
    return names, _box_from(section), ()


@dataclass
class ProblemConfig:
    """Loaded problem: domain objects plus the raw dict for provenance."""

    raw: dict
    name: str
    dfa: Dfa | None
    horizon: int
    noise: NoiseModel
    template: Subsystem | None
    count: int
    pattern: str
    subsystem_list: tuple
    explicit_wiring: tuple
    region_entries: tuple  # ((prop, {template var: (lo, hi)} | None), ...), None = remainder
    remainder_prop: str | None
    barrier_degree: int
    controller_degree: int
    gains: dict
    bound_mode: str
    verify_mode: str
    master_seed: int
    simulation: dict

    # -- instancing ----------------------------------------------------

    @property
    def homogeneous(self) -> bool:
        return self.template is not None

    def instance_sid(self, i: int) -> str:
        return f"{self.template.sid}_{i}"

    def rename_map(self, i: int) -> dict:
        tpl = self.template
        out = {v: f"{v}_{i}" for v in (*tpl.state_vars, *tpl.input_vars, *tpl.noise_vars)}
        if self.pattern == "full":
            # representative coordinate never instanced directly
            pass
        else:
            out.update({v: f"{v}_{i}" for v in tpl.internal_vars})
        return out

    def interconnection(self) -> Interconnection:
        if not self.homogeneous:
            return Interconnection(self.subsystem_list, dict(self.explicit_wiring))
        n = self.count
        tpl = self.template
        if self.pattern == "circular":
            return self._circular_network(tpl, n)
        if self.pattern == "full":
            return self._full_network(tpl, n)
        subs = tuple(
            tpl.rename(self.rename_map(i), sid=self.instance_sid(i)) for i in range(n)
        )
        return Interconnection(subs, {})

    def _circular_network(self, tpl: Subsystem, n: int) -> Interconnection:
        dim = len(tpl.state_vars)
        if len(tpl.internal_vars) != 2 * dim:
            raise ConfigError("circular wiring needs two internal blocks of state dimension")
        if n < 2:
            subs = (tpl.rename(self.rename_map(0), sid=self.instance_sid(0)),)
            return Interconnection(subs, {})
        subs = []
        wiring = {}
        identity = tuple(Polynomial.variable(v) for v in tpl.state_vars)
        for i in range(n):
            mapping = self.rename_map(i)
            sid = self.instance_sid(i)
            left, right = self.instance_sid((i - 1) % n), self.instance_sid((i + 1) % n)
            inst = tpl.rename(mapping, sid=sid)
            block = tuple(p.rename(mapping) for p in identity)
            if left == right:  # n == 2: both neighbour blocks come from one peer
                outputs = {left: block + block}
                wiring[(sid, left)] = tuple(mapping[v] for v in tpl.internal_vars)
            else:
                outputs = {left: block, right: block}
                wiring[(sid, left)] = tuple(mapping[v] for v in tpl.internal_vars[:dim])
                wiring[(sid, right)] = tuple(mapping[v] for v in tpl.internal_vars[dim:])
            subs.append(
                Subsystem(
                    sid=sid,
                    state_vars=inst.state_vars,
                    state_box=inst.state_box,
                    dynamics=inst.dynamics,
                    noise=inst.noise,
                    noise_vars=inst.noise_vars,
                    input_vars=inst.input_vars,
                    input_box=inst.input_box,
                    input_values=inst.input_values,
                    internal_vars=inst.internal_vars,
                    internal_box=inst.internal_box,
                    outputs=outputs,
                )
            )
        return Interconnection(tuple(subs), wiring)

    def _full_network(self, tpl: Subsystem, n: int) -> Interconnection:
        if len(tpl.state_vars) != 1:
            raise ConfigError("full wiring is implemented for scalar states")
        (rep,) = tpl.internal_vars
        lo, hi = tpl.internal_box.interval(rep)
        subs = []
        wiring = {}
        for i in range(n):
            mapping = self.rename_map(i)
            sid = self.instance_sid(i)
            peers = [j for j in range(n) if j != i]
            internal = tuple(f"{rep}{j}_{i}" for j in peers)
            state_var = mapping[tpl.state_vars[0]]
            outputs = {
                self.instance_sid(j): (Polynomial.variable(state_var),) for j in peers
            }
            for j, wvar in zip(peers, internal):
                wiring[(sid, self.instance_sid(j))] = (wvar,)
            dynamics = tuple(p.rename(mapping) for p in tpl.dynamics)
            subs.append(
                Subsystem(
                    sid=sid,
                    state_vars=(state_var,),
                    state_box=tpl.state_box.rename(mapping),
                    dynamics=dynamics,
                    noise=tpl.noise,
                    noise_vars=tuple(mapping[v] for v in tpl.noise_vars),
                    input_vars=tuple(mapping[v] for v in tpl.input_vars),
                    input_box=tpl.input_box.rename(mapping) if tpl.input_box else None,
                    input_values=tpl.input_values,
                    internal_vars=internal,
                    internal_box=Box({w: (lo, hi) for w in internal}),
                    outputs=outputs,
                )
            )
        return Interconnection(tuple(subs), wiring)

    def wired_index_pairs(self, n: int | None = None) -> tuple:
        """(receiver, sender) index pairs without building the network."""
        if not self.homogeneous:
            ids = [s.sid for s in self.subsystem_list]
            index = {sid: k for k, sid in enumerate(ids)}
            return tuple(
                sorted(
                    (index[i], index[j])
                    for (i, j), b in self.explicit_wiring
                    if b != "zero"
                )
            )
        n = self.count if n is None else n
        if self.pattern == "circular" and n >= 2:
            return tuple(
                sorted({(i, (i - 1) % n) for i in range(n)} | {(i, (i + 1) % n) for i in range(n)})
            )
        if self.pattern == "full":
            return tuple((i, j) for i in range(n) for j in range(n) if i != j)
        return ()

    # -- regions --------------------------------------------------------

    def regions(self, inter: Interconnection | None = None) -> LabeledRegions:
        if self.remainder_prop is None:
            raise ConfigError("config declares no regions")
        inter = inter or self.interconnection()
        entries = []
        for prop, tpl_box in self.region_entries:
            if tpl_box is None:
                continue
            boxes = {}
            if self.homogeneous:
                for i, sub in enumerate(inter.subsystems):
                    mapping = self.rename_map(i)
                    boxes[sub.sid] = Box({mapping[v]: iv for v, iv in tpl_box.items()})
            else:
                for sub in inter.subsystems:
                    boxes[sub.sid] = Box(tpl_box[sub.sid])
            entries.append((prop, boxes))
        return LabeledRegions(entries=tuple(entries), remainder=self.remainder_prop)

    def template_region_boxes(self, props) -> tuple:
        """Union of template-variable boxes for a set of propositions."""
        out = []
        for prop in sorted(props):
            found = False
            for name, tpl_box in self.region_entries:
                if name != prop:
                    continue
                found = True
                if tpl_box is None:
                    raise ConfigError(f"proposition {prop!r} is the remainder region")
                out.append(Box(tpl_box))
            if not found:
                raise ConfigError(f"unknown proposition {prop!r}")
        return tuple(out)

    @property
    def propositions(self) -> tuple:
        return tuple(p for p, _ in self.region_entries) + (
            (self.remainder_prop,) if self.remainder_prop else ()
        )


def load_config(data: Mapping) -> ProblemConfig:
    """Validate a raw config dict and build the domain objects."""
    name = data.get("name", "problem")
    noise = _noise_model(data.get("noise"))

    template = None
    count = 0
    pattern = "none"
    subsystem_list: tuple = ()
    explicit_wiring: tuple = ()
    if "subsystems" in data:
        section = data["subsystems"]
        wiring_section = data.get("wiring", {"pattern": "none"})
        if "template" in section:
            pattern = wiring_section.get("pattern", "none")
            template = _build_template(section["template"], noise, pattern)
            count = int(section.get("count", 1))
        elif "list" in section:
            subsystem_list = tuple(
                _build_concrete(entry, noise) for entry in section["list"]
            )
            explicit_wiring = tuple(
                ((e["to"], e["from"]), tuple(e["vars"])) for e in wiring_section.get("explicit", ())
            )
        else:
            raise ConfigError("subsystems section needs 'template' or 'list'")

    region_entries: list = []
    remainder = None
    if "regions" in data:
        for entry in data["regions"]:
            prop = _require(entry, "prop", "regions")
            if entry.get("remainder"):
                if remainder is not None:
                    raise ConfigError("only one remainder region is allowed")
                remainder = prop
                region_entries.append((prop, None))
            elif "box" in entry:
                region_entries.append((prop, {v: tuple(iv) for v, iv in entry["box"].items()}))
            elif "box_by_id" in entry:
                region_entries.append(
                    (prop, {sid: {v: tuple(iv) for v, iv in bx.items()} for sid, bx in entry["box_by_id"].items()})
                )
            else:
                raise ConfigError(f"region {prop!r} needs 'box', 'box_by_id', or 'remainder'")
        if remainder is None:
            raise ConfigError("one region must be marked as the remainder")

    dfa = None
    if "dfa" in data:
        d = data["dfa"]
        props = [p for p, _ in region_entries] + ([remainder] if remainder else [])
        if not props:
            props = sorted({p for _, p, _ in d["transitions"]})
        transitions = {(q, p): q2 for q, p, q2 in d["transitions"]}
        dfa = Dfa(
            states=tuple(d["states"]),
            initial=d["initial"],
            props=tuple(props),
            transitions=transitions,
            accepting=frozenset(d["accepting"]),
        )
        if region_entries:
            unknown = {p for (_, p) in transitions} - set(props)
            if unknown:
                raise ConfigError(f"DFA uses propositions without regions: {sorted(unknown)}")

    horizon = int(data.get("horizon", {}).get("M", 1))
    templates = data.get("templates", {})
    gains = dict(data.get("gains", {}))
    modes = data.get("modes", {})
    seeds = data.get("seeds", {})
    return ProblemConfig(
        raw=dict(data),
        name=name,
        dfa=dfa,
        horizon=horizon,
        noise=noise,
        template=template,
        count=count,
        pattern=pattern,
        subsystem_list=subsystem_list,
        explicit_wiring=explicit_wiring,
        region_entries=tuple(region_entries),
        remainder_prop=remainder,
        barrier_degree=int(templates.get("barrier_degree", 2)),
        controller_degree=int(templates.get("controller_degree", 1)),
        gains=gains,
        bound_mode=modes.get("bound", "tightest"),
        verify_mode=modes.get("verify", "sampled"),
        master_seed=int(seeds.get("master", 0)),
        simulation=dict(data.get("simulation", {})),
    )


def _build_template(tpl: Mapping, noise: NoiseModel, pattern: str) -> Subsystem:
    sid = _require(tpl, "id", "subsystems.template")
    state = _require(tpl, "state", "subsystems.template")
    state_vars = tuple(state)
    input_vars, input_box, input_values = _parse_input_section(tpl.get("input"))
    internal_section = tpl.get("internal", {})
    if pattern == "full":
        if "pattern" not in internal_section:
            raise ConfigError("full wiring expects internal: {pattern: full, box: [...]}")
        prefix = internal_section.get("prefix", "w")
        lo, hi = internal_section["box"]
        internal_vars = (prefix,)
        internal_box = Box({prefix: (lo, hi)})
    else:
        internal_vars = tuple(internal_section)
        internal_box = _box_from(internal_section) if internal_section else None
    noise_vars = tuple(tpl.get("noise_vars", ()))
    dynamics = tuple(parse_poly(tpl["dynamics"][v]) for v in state_vars)
    return Subsystem(
        sid=sid,
        state_vars=state_vars,
        state_box=_box_from(state),
        dynamics=dynamics,
        noise=noise,
        noise_vars=noise_vars,
        input_vars=input_vars,
        input_box=input_box,
        input_values=input_values,
        internal_vars=internal_vars,
        internal_box=internal_box,
    )


def _build_concrete(entry: Mapping, noise: NoiseModel) -> Subsystem:
    sid = _require(entry, "id", "subsystems.list")
    state = _require(entry, "state", "subsystems.list")
    state_vars = tuple(state)
    input_vars, input_box, input_values = _parse_input_section(entry.get("input"))
    internal = entry.get("internal", {})
    outputs = {
        target: tuple(parse_poly(s) for s in block)
        for target, block in entry.get("outputs", {}).items()
    }
    return Subsystem(
        sid=sid,
        state_vars=state_vars,
        state_box=_box_from(state),
        dynamics=tuple(parse_poly(entry["dynamics"][v]) for v in state_vars),
        noise=noise,
        noise_vars=tuple(entry.get("noise_vars", ())),
        input_vars=input_vars,
        input_box=input_box,
        input_values=input_values,
        internal_vars=tuple(internal),
        internal_box=_box_from(internal) if internal else None,
        outputs=outputs,
    )
