"""Benchmark instances: random diagrams, the EBO planning model, and the sweep runner."""

from __future__ import annotations

import itertools
import json
import math
import time
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from .errors import ContractError, LimidError, TrivialDiagramError
from .model import (
    DiagramBuilder, EuEvaluator, InfluenceDiagram, NodeKind, Strategy, brute_force_meu, normalize_eu,
    normalize_utilities, require_valid,
)
from .solver import SolveOptions, solve_meu, spu


@dataclass(frozen=True)
class RandomSpec:
    total_nodes: int
    decision_nodes: int
    utility_nodes: int | None = None
    max_parents: int = 3
    decision_max_parents: int = 2
    domain_size: int = 2
    seed: int = 0

    @property
    def n_utility(self) -> int:
        return self.decision_nodes if self.utility_nodes is None else self.utility_nodes

    @property
    def n_chance(self) -> int:
        return self.total_nodes - self.decision_nodes - self.n_utility

    def label(self) -> str:
        return f"n{self.total_nodes}_d{self.decision_nodes}_u{self.n_utility}_s{self.seed}"


def gen_random_diagram(spec: RandomSpec) -> InfluenceDiagram:
    """Random LIMID, fully determined by ``spec`` (including its seed).

    Chance and decision nodes are placed on a shuffled topological order.
    Chance nodes draw up to ``max_parents`` parents among earlier nodes,
    decision nodes up to ``decision_max_parents`` earlier chance nodes, and
    utility nodes are sinks with one or two parents. CPT rows are uniform on
    the simplex and utilities uniform on [-100, 100].
    """
    if spec.decision_nodes < 0 or spec.n_utility < 1 or spec.n_chance < 0:
        raise ContractError(f"infeasible random spec {spec}")
    if spec.decision_nodes + spec.n_chance < 1 or spec.domain_size < 2:
        raise ContractError(f"infeasible random spec {spec}")
    rng = np.random.default_rng(spec.seed)
    kinds = [NodeKind.DECISION] * spec.decision_nodes + [NodeKind.CHANCE] * spec.n_chance
    kinds = [kinds[i] for i in rng.permutation(len(kinds))]
    k = spec.domain_size
    b = DiagramBuilder()
    placed: list[tuple[str, NodeKind]] = []
    counters = {NodeKind.CHANCE: 0, NodeKind.DECISION: 0}
    for kind in kinds:
        if kind is NodeKind.DECISION:
            pool = [name for name, kd in placed if kd is NodeKind.CHANCE]
            limit = spec.decision_max_parents
        else:
            pool = [name for name, _ in placed]
            limit = spec.max_parents
        n_par = int(rng.integers(0, min(limit, len(pool)) + 1))
        parents = sorted(rng.choice(len(pool), size=n_par, replace=False).tolist()) if n_par else []
        parents = [pool[i] for i in parents]
        prefix = "D" if kind is NodeKind.DECISION else "C"
        name = f"{prefix}{counters[kind]}"
        counters[kind] += 1
        if kind is NodeKind.DECISION:
            b.decision(name, parents, k)
        else:
            rows = rng.dirichlet(np.ones(k), size=k ** len(parents))
            b.chance(name, parents, rows, k)
        placed.append((name, kind))
    names = [name for name, _ in placed]
    for u in range(spec.n_utility):
        n_par = int(rng.integers(1, min(2, len(names)) + 1))
        parents = [names[i] for i in sorted(rng.choice(len(names), size=n_par, replace=False).tolist())]
        b.utility(f"U{u}", parents, rng.uniform(-100.0, 100.0, size=k ** n_par))
    diagram = b.build()
    require_valid(diagram)
    return diagram


# -- EBO planning model ---------------------------------------------------------------

EBO_ACTIONS = {
    # decision -> (outcome node, cost)
    "destroy_C2": ("C2_destroyed", 20.0),
    "destroy_Radars": ("EW_GCI_radars_destroyed", 20.0),
    "destroy_Communications": ("communications_destroyed", 20.0),
    "launch_air_strike": ("air_strike_succeeded", 50.0),
    "destroy_RD": ("RD_destroyed", 20.0),
    "destroy_storage": ("storage_destroyed", 20.0),
    "destroy_assembly": ("assembly_destroyed", 20.0),
    "launch_ground_attack": ("ground_attack_succeeded", 150.0),
    "launch_broadcasting": ("broadcasting_succeeded", 20.0),
    "capture_bodyguard": ("bodyguard_captured", 80.0),
    "use_special_force": ("special_force_succeeded", 100.0),
}


@dataclass(frozen=True)
class EboMapping:
    """Which actions feed which workability node, and which of those feed which subgoal."""

    workability: tuple[tuple[str, tuple[str, ...]], ...] = (
        ("IADS", ("destroy_C2", "destroy_Radars", "destroy_Communications")),
        ("Air_force", ("launch_air_strike",)),
        ("Artillery", ("destroy_RD", "destroy_storage", "destroy_assembly")),
        ("Ground_force", ("launch_ground_attack",)),
        ("Morale", ("launch_broadcasting",)),
        ("Commander_in_custody", ("capture_bodyguard", "use_special_force")),
    )
    subgoals: tuple[tuple[str, tuple[str, ...]], ...] = (
        ("Air_superiority", ("IADS", "Air_force")),
        ("Territory_occupation", ("Artillery", "Ground_force")),
        ("Commander_surrender", ("Morale", "Commander_in_custody")),
    )
    label: str = "default"


def _by_failures(n_parents: int, success_by_failures) -> np.ndarray:
    """Binary CPT (0 = false, 1 = true) whose success depends on how many parents are false."""
    rows = []
    for config in itertools.product((0, 1), repeat=n_parents):
        k = config.count(0)
        p = success_by_failures[k] if k < len(success_by_failures) else 0.0
        rows.append([1.0 - p, p])
    return np.array(rows)


def build_ebo(mapping: EboMapping | None = None) -> InfluenceDiagram:
    """The effects-based operations planning LIMID.

    Every node is binary with category 0 meaning false (action not taken,
    outcome not achieved) and 1 meaning true. An action succeeds with
    probability 0.9 when taken and never otherwise. Workability nodes and
    subgoals lose half their success probability per failed parent and drop
    to zero from two failures on; the hypothesis succeeds with probability
    1, 0.6, 0.3, 0 for 0, 1, 2, 3 failed subgoals.
    """
    mapping = mapping or EboMapping()
    b = DiagramBuilder()
    for action in EBO_ACTIONS:
        b.decision(action)
    for action, (outcome, _) in EBO_ACTIONS.items():
        b.chance(outcome, [action], [[1.0, 0.0], [0.1, 0.9]])
    for name, actions in mapping.workability:
        parents = [EBO_ACTIONS[a][0] for a in actions]
        b.chance(name, parents, _by_failures(len(parents), (1.0, 0.5)))
    for name, children in mapping.subgoals:
        b.chance(name, list(children), _by_failures(len(children), (1.0, 0.5)))
    b.chance("Hypothesis", [name for name, _ in mapping.subgoals], _by_failures(len(mapping.subgoals), (1.0, 0.6, 0.3)))
    b.utility("U_H", ["Hypothesis"], [-500.0, 1000.0])
    for action, (_, cost) in EBO_ACTIONS.items():
        b.utility(f"cost_{action}", [action], [0.0, -cost])
    diagram = b.build()
    require_valid(diagram)
    return diagram


def ebo_all_actions(diagram: InfluenceDiagram) -> dict[int, tuple[int, ...]]:
    return {d: (1,) for d in diagram.decisions}


def alternative_ebo_mappings() -> list[EboMapping]:
    """Every pairing of the six workability nodes into three two-parent subgoals,
    plus single-action moves between the default workability groups."""
    base = EboMapping()
    work = [name for name, _ in base.workability]
    subgoal_names = [name for name, _ in base.subgoals]
    out = []

    def pairings(items):
        if not items:
            yield []
            return
        first = items[0]
        for i in range(1, len(items)):
            rest = items[1:i] + items[i + 1:]
            for tail in pairings(rest):
                yield [(first, items[i])] + tail

    for n, pairs in enumerate(pairings(work)):
        subgoals = tuple((sg, pair) for sg, pair in zip(subgoal_names, pairs))
        if subgoals != base.subgoals:
            out.append(EboMapping(base.workability, subgoals, f"pairing{n}"))
    groups = dict(base.workability)
    moves = [("destroy_C2", "Air_force"), ("destroy_RD", "Ground_force"), ("capture_bodyguard", "Morale")]
    for action, target in moves:
        new = {}
        for name, acts in groups.items():
            acts = tuple(a for a in acts if a != action)
            if name == target:
                acts = acts + (action,)
            new[name] = acts
        out.append(EboMapping(tuple(new.items()), base.subgoals, f"move_{action}_to_{target}"))
    return out


# -- benchmark runner -----------------------------------------------------------------

ROW_FIELDS = (
    "spec", "seed", "cr_time", "cr_eu", "cr_upper_bound", "cr_nodes_evaluated", "cr_gap_percent", "cr_status",
    "spu_time", "spu_eu", "spu_gap_percent_vs_ub", "spu_gap_percent_vs_cr", "error",
)
MEAN_FIELDS = ("cr_time", "cr_nodes_evaluated", "cr_gap_percent", "spu_time", "spu_gap_percent_vs_ub", "spu_gap_percent_vs_cr")
TIME_FIELDS = ("cr_time", "spu_time")


@dataclass
class BenchRow:
    spec: str
    seed: int
    cr_time: float = math.nan
    cr_eu: float = math.nan
    cr_upper_bound: float = math.nan
    cr_nodes_evaluated: int = 0
    cr_gap_percent: float = math.nan
    cr_status: str = ""
    spu_time: float = math.nan
    spu_eu: float = math.nan
    spu_gap_percent_vs_ub: float = math.nan
    spu_gap_percent_vs_cr: float = math.nan
    error: str = ""


@dataclass
class BenchReport:
    """Per-instance rows plus per-spec means (rows with an error are left out of the means).

    Gaps are percentages on the normalized utility scale, the same scale the
    branch-and-bound gap uses: ``spu_gap_percent_vs_ub`` compares SPU with the
    final upper bound, ``spu_gap_percent_vs_cr`` with the final incumbent.
    """

    rows: list[BenchRow] = field(default_factory=list)
    name: str = "bench"

    def means(self) -> dict[str, dict[str, float]]:
        out: dict[str, dict[str, float]] = {}
        for spec in dict.fromkeys(r.spec for r in self.rows):
            ok = [r for r in self.rows if r.spec == spec and not r.error]
            agg: dict[str, float] = {"instances": len(ok)}
            for f in MEAN_FIELDS:
                agg[f"mean_{f}"] = float(np.mean([getattr(r, f) for r in ok])) if ok else math.nan
            agg["max_spu_gap_percent_vs_ub"] = max((r.spu_gap_percent_vs_ub for r in ok), default=math.nan)
            out[spec] = agg
        return out

    def _rows(self, timings: bool):
        for r in self.rows:
            d = asdict(r)
            if not timings:
                for f in TIME_FIELDS:
                    d[f] = 0.0
            yield d

    def to_tsv(self, timings: bool = True) -> str:
        def fmt(v):
            return f"{v:.10g}" if isinstance(v, float) else str(v)

        lines = ["\t".join(ROW_FIELDS)]
        lines += ["\t".join(fmt(d[f]) for f in ROW_FIELDS) for d in self._rows(timings)]
        lines.append("")
        cols = ["spec", "instances"] + [f"mean_{f}" for f in MEAN_FIELDS] + ["max_spu_gap_percent_vs_ub"]
        lines.append("\t".join(cols))
        for spec, agg in self.means().items():
            if not timings:
                agg = {k: (0.0 if k.removeprefix("mean_") in TIME_FIELDS else v) for k, v in agg.items()}
            lines.append("\t".join([spec] + [fmt(agg[c]) if c != "instances" else str(agg[c]) for c in cols[1:]]))
        return "\n".join(lines) + "\n"

    def to_json(self, timings: bool = True) -> str:
        means = self.means()
        if not timings:
            means = {s: {k: (0.0 if k.removeprefix("mean_") in TIME_FIELDS else v) for k, v in a.items()} for s, a in means.items()}
        doc = {"rows": list(self._rows(timings)), "means": means}
        return json.dumps(doc, indent=2, allow_nan=True) + "\n"

    def write(self, directory, timings: bool = True) -> tuple[Path, Path]:
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        tsv, js = directory / f"{self.name}.tsv", directory / f"{self.name}.json"
        tsv.write_text(self.to_tsv(timings))
        js.write_text(self.to_json(timings))
        return tsv, js


def _gap(reference: float, value: float) -> float:
    return max(0.0, 100.0 * (reference - value) / max(abs(reference), 1e-12))


def bench_instance(label: str, seed: int, diagram: InfluenceDiagram, options: SolveOptions | None = None,
                   spu_init: Strategy | None = None) -> BenchRow:
    """Solve one diagram with both methods; failures end up in ``error``."""
    row = BenchRow(label, seed)
    try:
        t0 = time.perf_counter()
        result = solve_meu(diagram, options)
        row.cr_time = time.perf_counter() - t0
        row.cr_eu, row.cr_upper_bound = result.eu, result.upper_bound
        row.cr_nodes_evaluated = result.nodes_evaluated
        row.cr_gap_percent = result.gap_percent
        row.cr_status = result.status.value
        t0 = time.perf_counter()
        _, spu_eu = spu(diagram, init=spu_init)
        row.spu_time = time.perf_counter() - t0
        row.spu_eu = spu_eu
        try:
            _, info = normalize_utilities(diagram)
        except TrivialDiagramError:
            row.spu_gap_percent_vs_ub = row.spu_gap_percent_vs_cr = 0.0
        else:
            z = normalize_eu(spu_eu, info)
            row.spu_gap_percent_vs_ub = _gap(result.ub_normalized, z)
            row.spu_gap_percent_vs_cr = _gap(result.lb_normalized, z)
    except LimidError as exc:
        row.error = f"{type(exc).__name__}: {exc}"
    return row


def run_benchmark(specs: list[RandomSpec], trials: int, options: SolveOptions | None = None,
                  include_ebo: bool = False) -> BenchReport:
    """Trial ``t`` of a spec uses seed ``spec.seed + t``; rows come out in spec, seed order.

    With ``include_ebo`` a final row holds the EBO model, with SPU started
    from the all-zero (no action) strategy.
    """
    if trials < 1:
        raise ContractError("trials must be positive")
    report = BenchReport(name=bench_name(specs, trials, include_ebo))
    for spec in specs:
        for t in range(trials):
            s = replace(spec, seed=spec.seed + t)
            label = replace(s, seed=0).label().removesuffix("_s0")
            try:
                diagram = gen_random_diagram(s)
            except LimidError as exc:
                report.rows.append(BenchRow(label, s.seed, error=f"{type(exc).__name__}: {exc}"))
                continue
            report.rows.append(bench_instance(label, s.seed, diagram, options))
    if include_ebo:
        report.rows.append(bench_instance("ebo", 0, build_ebo(), options))
    return report


def bench_name(specs: list[RandomSpec], trials: int, include_ebo: bool = False) -> str:
    parts = [f"n{s.total_nodes}_d{s.decision_nodes}_u{s.n_utility}_s{s.seed}" for s in specs]
    return "bench_" + "__".join(parts + [f"t{trials}"] + (["ebo"] if include_ebo else []))


# -- EBO mapping sweep ----------------------------------------------------------------


@dataclass
class MappingOutcome:
    label: str
    brute_eu: float
    solve_eu: float
    status: str
    all_actions_eu: float
    brute_choices: tuple[int, ...]
    solve_choices: tuple[int, ...]
    solve_time: float

    @property
    def agreement(self) -> float:
        return abs(self.brute_eu - self.solve_eu)


def ebo_mapping_sweep(mappings: list[EboMapping] | None = None, options: SolveOptions | None = None) -> list[MappingOutcome]:
    """Brute force and branch-and-bound on the default mapping and every alternative."""
    mappings = mappings if mappings is not None else [EboMapping()] + alternative_ebo_mappings()
    out = []
    for mapping in mappings:
        diagram = build_ebo(mapping)
        best, brute_eu = brute_force_meu(diagram)
        t0 = time.perf_counter()
        result = solve_meu(diagram, options)
        elapsed = time.perf_counter() - t0
        all_eu = EuEvaluator(diagram).pure(ebo_all_actions(diagram))
        out.append(MappingOutcome(
            mapping.label, brute_eu, result.eu, result.status.value, all_eu,
            tuple(c[0] for c in best.choices().values()),
            tuple(c[0] for c in result.strategy.choices().values()),
            elapsed,
        ))
    return out
