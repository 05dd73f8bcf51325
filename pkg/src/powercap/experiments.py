"""Experiment specs, built-in experiments, CSV/manifest output and replay."""

from __future__ import annotations

import csv
import io
import json
import logging
import sys
from dataclasses import asdict, dataclass, field
from pathlib import Path

from . import __version__
from .engine import CSV_COLUMNS, SCHEDULERS, SweepRow, sweep
from .phy import PhysicalParams
from .topology import (connectivity, gen_grid, gen_star, gen_theorem2, gen_uniform, is_connected,
                       nearest_neighbor_flows, random_pair_flows)

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

log = logging.getLogger(__name__)

TOPOLOGIES = ("uniform", "grid", "star", "theorem2")
FLOW_PATTERNS = ("nearest", "random_pairs", "builtin")


class ConnectivityRetriesExhausted(RuntimeError):
    pass


@dataclass
class ExperimentSpec:
    name: str
    topology: str
    topology_params: dict
    flows: str
    ladder: list
    flow_params: dict = field(default_factory=dict)
    schedulers: list = field(default_factory=lambda: list(SCHEDULERS))
    routing: str = "hop"
    workload: int = 500
    reps: int = 10
    seed: int = 0
    require_connected: bool = True
    retry_cap: int = 2000
    params: dict = field(default_factory=dict)
    cen_order: str = "random"

    def __post_init__(self):
        self.ladder = [float(r) for r in self.ladder]
        self.schedulers = list(self.schedulers)
        if not self.ladder or any(b <= a for a, b in zip(self.ladder, self.ladder[1:])):
            raise ValueError("r ladder must be non-empty and strictly ascending")
        if self.reps < 1:
            raise ValueError("reps must be at least 1")
        if self.workload < 1:
            raise ValueError("workload must be positive")
        if self.topology not in TOPOLOGIES:
            raise ValueError(f"unknown topology {self.topology!r}")
        if self.flows not in FLOW_PATTERNS:
            raise ValueError(f"unknown flow pattern {self.flows!r}")
        if self.flows == "builtin" and self.topology == "uniform":
            raise ValueError("uniform topologies need an explicit flow pattern")
        bad = set(self.schedulers) - set(SCHEDULERS)
        if bad:
            raise ValueError(f"unknown schedulers {sorted(bad)}")

    @property
    def phy(self) -> PhysicalParams:
        return PhysicalParams(**self.params)

    def to_dict(self) -> dict:
        return asdict(self)


def builtin(name: str, **overrides) -> ExperimentSpec:
    """The three random/grid experiments plus the star and parallel-links constructions."""
    ladder = [250, 500, 750, 1000]
    specs = {
        # one-hop flows; nodes with no neighbour at the lowest rung send nothing
        "exp1": dict(topology="uniform", topology_params={"n": 200, "side": 3000.0},
                     flows="nearest", flow_params={"skip_isolated": True},
                     require_connected=False),
        "exp2": dict(topology="uniform", topology_params={"n": 20, "side": 1000.0},
                     flows="random_pairs", flow_params={"per_source": 1}),
        "exp3": dict(topology="grid", topology_params={"rows": 25, "cols": 25, "spacing": 200.0},
                     flows="builtin"),
        "star": dict(topology="star", topology_params={"k": 2, "spacing": 100.0},
                     flows="builtin", ladder=[110.0, 210.0], schedulers=["cen"], reps=1),
        "theorem2": dict(topology="theorem2", topology_params={"m": 2, "d": 100.0},
                         flows="builtin", ladder=[75.0, 1000.0], schedulers=["cen"], reps=1),
    }
    if name not in specs:
        raise KeyError(f"no built-in experiment {name!r}; choose from {sorted(specs)}")
    kw = {"ladder": ladder, **specs[name], **overrides}
    return ExperimentSpec(name=name, **kw)


BUILTINS = ("exp1", "exp2", "exp3", "star", "theorem2")


def _instance(spec: ExperimentSpec, seed: int):
    tp, fp = spec.topology_params, spec.flow_params
    if spec.topology == "uniform":
        net = gen_uniform(int(tp["n"]), float(tp["side"]), seed)
        if spec.flows == "nearest":
            flows = nearest_neighbor_flows(net, spec.ladder[0], seed, spec.workload,
                                           skip_isolated=bool(fp.get("skip_isolated", False)))
        else:
            flows = random_pair_flows(net, seed, spec.workload, int(fp.get("per_source", 1)))
        return net, flows
    if spec.topology == "grid":
        return gen_grid(int(tp["rows"]), int(tp["cols"]), float(tp["spacing"]), spec.workload)
    if spec.topology == "star":
        return gen_star(int(tp["k"]), float(tp.get("spacing", 100.0)),
                        int(tp.get("hops_per_side", 1)), spec.workload)
    return gen_theorem2(int(tp["m"]), float(tp["d"]), spec.workload)


def instances(spec: ExperimentSpec, seeds=None):
    """``(seed, network, flows)`` per repetition.

    Random topologies that are disconnected at the lowest rung are redrawn
    with the next seed.  Passing ``seeds`` skips the search (manifest replay).
    """
    if seeds is not None:
        return [(s, *_instance(spec, s)) for s in seeds]
    out = []
    seed = spec.seed
    tries = 0
    while len(out) < spec.reps:
        if tries >= spec.retry_cap:
            raise ConnectivityRetriesExhausted(
                f"{spec.name}: seeds {spec.seed}..{seed - 1} gave only {len(out)} of "
                f"{spec.reps} networks connected at r={spec.ladder[0]:g}")
        net, flows = _instance(spec, seed)
        tries += 1
        if not spec.require_connected or is_connected(connectivity(net, spec.ladder[0])):
            out.append((seed, net, flows))
        seed += 1
    return out


def rows_to_csv(rows: list[SweepRow]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for row in rows:
        writer.writerow(row.csv_fields())
    return buf.getvalue()


@dataclass
class ExperimentResult:
    spec: ExperimentSpec
    seeds: list
    rows: list
    csv_text: str
    manifest: dict
    csv_path: Path | None = None
    manifest_path: Path | None = None


def run_experiment(spec: ExperimentSpec, out_dir=None, seeds=None) -> ExperimentResult:
    """Sweep every (instance, r, scheduler); optionally write ``<name>.csv`` and ``<name>.json``."""
    insts = instances(spec, seeds)
    rows = sweep(insts, spec.ladder, spec.schedulers, spec.phy, spec.routing,
                 cen_order=spec.cen_order)
    text = rows_to_csv(rows)
    used = [s for s, _, _ in insts]
    manifest = {"tool": "powercap", "version": __version__, "spec": spec.to_dict(),
                "resolved_params": spec.phy.to_dict(), "seeds": used,
                "csv": f"{spec.name}.csv"}
    result = ExperimentResult(spec, used, rows, text, manifest)
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        result.csv_path = out / f"{spec.name}.csv"
        result.manifest_path = out / f"{spec.name}.json"
        result.csv_path.write_text(text)
        result.manifest_path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return result


def load_manifest(path) -> tuple[ExperimentSpec, list]:
    doc = json.loads(Path(path).read_text())
    return ExperimentSpec(**doc["spec"]), list(doc["seeds"])


def replay(path, out_dir=None) -> ExperimentResult:
    """Re-run an experiment from its JSON manifest with the recorded seeds."""
    spec, seeds = load_manifest(path)
    return run_experiment(spec, out_dir, seeds=seeds)


def load_spec(path) -> ExperimentSpec:
    """Read a TOML experiment file, or a JSON manifest.

    A TOML file may set ``base = "exp2"`` to start from a built-in and override
    individual fields.
    """
    path = Path(path)
    if path.suffix == ".json":
        return load_manifest(path)[0]
    with open(path, "rb") as fh:
        doc = tomllib.load(fh)
    base = doc.pop("base", None)
    if base is not None:
        return builtin(base, **doc)
    return ExperimentSpec(**doc)
