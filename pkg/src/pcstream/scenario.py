"""Scenario configuration and run assembly.

A scenario is a JSON document naming the protocol, topology, link
parameters, dataset and seed for one simulated run.  load_scenario
validates it field by field and always names the offending key, so the
CLI can fail fast with a usable message.  run_scenario wires the world
and drives it to completion, returning the raw objects the metrics
layer reads.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field, fields

from .codec import gen_synthetic, voxelize
from .dash import CACHE_CAPACITY_BYTES, BaselineNet, wire_baseline
from .endpoints import (
    BUDGET_FRACTION,
    DEFAULT_WINDOW,
    Catalog,
    Consumer,
    Producer,
    ProducerStore,
)
from .forwarding import CS_CAPACITY, ContentStore, Forwarder
from .layering import TIER_BOUNDS, check_ratios
from .naming import service_prefix
from .netsim import (
    MS,
    SEC,
    LinkParams,
    SimWorld,
    Topology,
    build_cdn_tree,
    build_inds_tree,
    build_linear,
    next_hop_faces,
)

PROTOCOLS = ("inds", "dash_pc", "pcc_dash")
TOPOLOGIES = ("linear_debug", "inds_tree", "cdn_three_tier")

DEFAULT_TOPOLOGY = {
    "inds": "inds_tree",
    "dash_pc": "cdn_three_tier",
    "pcc_dash": "cdn_three_tier",
}

STORE_MANIFEST = "metadata.json"


class ScenarioError(ValueError):
    """Configuration problem; .key names the offending field."""

    def __init__(self, key: str, message: str):
        super().__init__(f"{key}: {message}")
        self.key = key


@dataclass(frozen=True)
class SyntheticSpec:
    """Encode-on-the-fly dataset description."""

    shape: str = "sphere_shell"
    n_points: int = 7000
    depth: int = 7
    n_frames: int = 300
    gof_size: int = 30
    seed: int = 42
    ratios: tuple[float, ...] = TIER_BOUNDS
    dataset: str = "synthetic"
    window: str = "TimeWindow_19700101T000000"


@dataclass(frozen=True)
class ScenarioConfig:
    protocol: str
    dataset_store: str | None = None
    synthetic: SyntheticSpec | None = None
    scenario_id: str | None = None
    topology: str | None = None
    bandwidth_mbps: float = 50.0
    interior_bandwidth_mbps: float = 100.0
    loss_pct: float = 0.0
    gilbert_elliott: tuple[float, float, float, float] | None = None
    prop_delay_ms: float = 2.0
    queue_limit: int = 1000
    n_consumers: int = 10
    start_stagger_ms: float = 500.0
    warmup_ms: float = 500.0
    gofs: int | None = None
    seed: int = 1
    window: int = DEFAULT_WINDOW
    safety: float = BUDGET_FRACTION
    cs_capacity: int = CS_CAPACITY
    cache_capacity_bytes: int = CACHE_CAPACITY_BYTES
    consumer_local_cs: bool = True
    estimator_mode: str | None = None
    trace: str | None = None

    # -- derived ----------------------------------------------------------

    def resolved_topology(self) -> str:
        return self.topology or DEFAULT_TOPOLOGY[self.protocol]

    def resolved_id(self) -> str:
        if self.scenario_id:
            return self.scenario_id
        bw = f"{self.bandwidth_mbps:g}"
        loss = f"{self.loss_pct:g}"
        return f"{self.protocol}_{bw}mbps_{loss}pct_seed{self.seed}"

    def access_link(self) -> LinkParams:
        return LinkParams(
            bandwidth_bps=int(self.bandwidth_mbps * 1e6),
            prop_ns=int(self.prop_delay_ms * MS),
            queue_limit=self.queue_limit,
            loss_rate=self.loss_pct / 100.0,
            gilbert_elliott=self.gilbert_elliott,
        )

    def interior_link(self) -> LinkParams:
        return LinkParams(
            bandwidth_bps=int(self.interior_bandwidth_mbps * 1e6),
            prop_ns=int(self.prop_delay_ms * MS),
            queue_limit=self.queue_limit,
            loss_rate=self.loss_pct / 100.0,
            gilbert_elliott=self.gilbert_elliott,
        )

    def warmup_ns(self) -> int:
        return int(self.warmup_ms * MS)

    def starts_ns(self) -> list[int]:
        step = int(self.start_stagger_ms * MS)
        return [i * step for i in range(self.n_consumers)]


# ---------------------------------------------------------------------------
# Validation
# ---------------------------------------------------------------------------


def _require(cond: bool, key: str, message: str) -> None:
    if not cond:
        raise ScenarioError(key, message)


def _num(doc: dict, key: str, lo=None, hi=None, default=None, integer=False):
    value = doc.get(key, default)
    if value is None:
        return None
    _require(isinstance(value, (int, float)) and not isinstance(value, bool),
             key, f"expected a number, got {value!r}")
    if integer:
        _require(float(value).is_integer(), key, f"expected an integer, got {value!r}")
        value = int(value)
    _require(lo is None or value >= lo, key, f"must be >= {lo}, got {value}")
    _require(hi is None or value <= hi, key, f"must be <= {hi}, got {value}")
    return value


def _load_synthetic(doc: dict) -> SyntheticSpec:
    allowed = {f.name for f in fields(SyntheticSpec)}
    for key in doc:
        _require(key in allowed, f"dataset.synthetic.{key}", "unknown key")
    kw: dict = {}
    if "shape" in doc:
        _require(isinstance(doc["shape"], str), "dataset.synthetic.shape",
                 "expected a string")
        kw["shape"] = doc["shape"]
    for key, lo, hi in (
        ("n_points", 1, 10_000_000),
        ("depth", 1, 10),
        ("n_frames", 1, 100_000),
        ("gof_size", 1, 1000),
        ("seed", 0, None),
    ):
        value = _num(doc, key, lo=lo, hi=hi, integer=True)
        if value is not None:
            kw[key] = value
    if "ratios" in doc:
        ratios = doc["ratios"]
        _require(
            isinstance(ratios, list)
            and all(isinstance(r, (int, float)) for r in ratios),
            "dataset.synthetic.ratios", "expected a list of numbers")
        try:
            kw["ratios"] = check_ratios(tuple(ratios))
        except Exception as exc:
            raise ScenarioError("dataset.synthetic.ratios", str(exc)) from None
    for key in ("dataset", "window"):
        if key in doc:
            _require(isinstance(doc[key], str), f"dataset.synthetic.{key}",
                     "expected a string")
            kw[key] = doc[key]
    return SyntheticSpec(**kw)


def load_scenario(doc: dict | str | os.PathLike) -> ScenarioConfig:
    """Parse and validate a scenario document (dict, JSON text handled by
    the caller, or a path to a JSON file)."""
    if not isinstance(doc, dict):
        path = os.fspath(doc)
        try:
            with open(path, "rb") as fh:
                doc = json.load(fh)
        except FileNotFoundError:
            raise ScenarioError("scenario", f"file not found: {path}") from None
        except json.JSONDecodeError as exc:
            raise ScenarioError("scenario", f"invalid JSON: {exc}") from None
        if not isinstance(doc, dict):
            raise ScenarioError("scenario", "top level must be a JSON object")

    known = {
        "id", "protocol", "topology", "dataset", "bandwidth_mbps",
        "interior_bandwidth_mbps", "loss_pct", "gilbert_elliott",
        "prop_delay_ms", "queue_limit", "n_consumers", "start_stagger_ms",
        "warmup_ms", "gofs", "seed", "window", "safety", "cs_capacity",
        "cache_capacity_bytes", "consumer_local_cs", "estimator_mode",
        "trace",
    }
    for key in doc:
        _require(key in known, key, "unknown key")

    protocol = doc.get("protocol")
    _require(protocol in PROTOCOLS, "protocol",
             f"expected one of {PROTOCOLS}, got {protocol!r}")

    topology = doc.get("topology")
    if topology is not None:
        _require(topology in TOPOLOGIES, "topology",
                 f"expected one of {TOPOLOGIES}, got {topology!r}")

    dataset = doc.get("dataset")
    _require(isinstance(dataset, dict), "dataset",
             'expected {"store": path} or {"synthetic": {...}}')
    _require(len(dataset) == 1 and next(iter(dataset)) in ("store", "synthetic"),
             "dataset", 'expected exactly one of "store" or "synthetic"')
    dataset_store = None
    synthetic = None
    if "store" in dataset:
        _require(isinstance(dataset["store"], str), "dataset.store",
                 "expected a path string")
        dataset_store = dataset["store"]
    else:
        _require(isinstance(dataset["synthetic"], dict), "dataset.synthetic",
                 "expected an object")
        synthetic = _load_synthetic(dataset["synthetic"])

    ge = doc.get("gilbert_elliott")
    if ge is not None:
        _require(
            isinstance(ge, list) and len(ge) == 4
            and all(isinstance(x, (int, float)) for x in ge)
            and all(0.0 <= x <= 1.0 for x in ge),
            "gilbert_elliott", "expected four probabilities in [0, 1]")
        ge = tuple(float(x) for x in ge)

    estimator_mode = doc.get("estimator_mode")
    if estimator_mode is not None:
        _require(estimator_mode in ("goodput", "capacity"), "estimator_mode",
                 f'expected "goodput" or "capacity", got {estimator_mode!r}')

    scenario_id = doc.get("id")
    if scenario_id is not None:
        _require(isinstance(scenario_id, str) and scenario_id != "", "id",
                 "expected a non-empty string")
    trace = doc.get("trace")
    if trace is not None:
        _require(isinstance(trace, str) and trace != "", "trace",
                 "expected a file path string")
    local_cs = doc.get("consumer_local_cs", True)
    _require(isinstance(local_cs, bool), "consumer_local_cs",
             "expected true or false")

    cfg = ScenarioConfig(
        protocol=protocol,
        dataset_store=dataset_store,
        synthetic=synthetic,
        scenario_id=scenario_id,
        topology=topology,
        bandwidth_mbps=_num(doc, "bandwidth_mbps", lo=0.001, default=50.0),
        interior_bandwidth_mbps=_num(doc, "interior_bandwidth_mbps",
                                     lo=0.001, default=100.0),
        loss_pct=_num(doc, "loss_pct", lo=0.0, hi=100.0, default=0.0),
        gilbert_elliott=ge,
        prop_delay_ms=_num(doc, "prop_delay_ms", lo=0.0, default=2.0),
        queue_limit=_num(doc, "queue_limit", lo=1, default=1000, integer=True),
        n_consumers=_num(doc, "n_consumers", lo=1, hi=1000, default=10,
                         integer=True),
        start_stagger_ms=_num(doc, "start_stagger_ms", lo=0.0, default=500.0),
        warmup_ms=_num(doc, "warmup_ms", lo=0.0, default=500.0),
        gofs=_num(doc, "gofs", lo=1, integer=True),
        seed=_num(doc, "seed", lo=0, default=1, integer=True),
        window=_num(doc, "window", lo=1, default=DEFAULT_WINDOW, integer=True),
        safety=_num(doc, "safety", lo=0.01, hi=1.0, default=BUDGET_FRACTION),
        cs_capacity=_num(doc, "cs_capacity", lo=1, default=CS_CAPACITY,
                         integer=True),
        cache_capacity_bytes=_num(doc, "cache_capacity_bytes", lo=0,
                                  default=CACHE_CAPACITY_BYTES, integer=True),
        consumer_local_cs=local_cs,
        estimator_mode=estimator_mode,
        trace=trace,
    )
    return cfg


# ---------------------------------------------------------------------------
# Dataset loading
# ---------------------------------------------------------------------------


def build_synthetic_store(spec: SyntheticSpec) -> ProducerStore:
    clouds = [
        voxelize(gen_synthetic(spec.shape, spec.n_points, seed=spec.seed + i),
                 spec.depth)
        for i in range(spec.n_frames)
    ]
    return ProducerStore.build(spec.dataset, spec.window, clouds,
                               gof_size=spec.gof_size, ratios=spec.ratios)


def load_store_catalog(store_dir: str) -> Catalog:
    path = os.path.join(store_dir, STORE_MANIFEST)
    try:
        with open(path, "rb") as fh:
            return Catalog.from_json(fh.read())
    except FileNotFoundError:
        raise ScenarioError(
            "dataset.store", f"no {STORE_MANIFEST} under {store_dir}") from None


def load_dataset(cfg: ScenarioConfig) -> ProducerStore:
    """Producer store for a scenario: size-manifest packets for a
    pre-encoded store directory, or a fresh synthetic encode."""
    if cfg.dataset_store is not None:
        return ProducerStore.from_catalog(load_store_catalog(cfg.dataset_store))
    return build_synthetic_store(cfg.synthetic)


# ---------------------------------------------------------------------------
# Assembly and execution
# ---------------------------------------------------------------------------


@dataclass
class RunResult:
    """Raw simulation objects for one finished run."""

    config: ScenarioConfig
    catalog: Catalog
    topo: Topology
    world: SimWorld
    consumers: list  # Consumer or DashConsumer, by index
    producer: Producer | None = None
    forwarders: dict[str, Forwarder] = field(default_factory=dict)
    local_stores: list[ContentStore] = field(default_factory=list)
    baseline: BaselineNet | None = None


def _build_topology(cfg: ScenarioConfig, world: SimWorld) -> Topology:
    kind = cfg.resolved_topology()
    access = cfg.access_link()
    interior = cfg.interior_link()
    if kind == "linear_debug":
        return build_linear(world, access, n_consumers=cfg.n_consumers,
                            interior=interior)
    if kind == "inds_tree":
        return build_inds_tree(world, access, n_consumers=cfg.n_consumers,
                               interior=interior)
    return build_cdn_tree(world, access, n_consumers=cfg.n_consumers,
                          interior=interior)


def _wire_inds(cfg: ScenarioConfig, topo: Topology, store: ProducerStore,
               result: RunResult) -> None:
    world = topo.world
    producer = Producer(store)
    topo.host(topo.producer).handler = producer.handler
    result.producer = producer

    toward_producer = next_hop_faces(topo, topo.producer)
    for name in topo.forwarders:
        fwd = Forwarder(name, cs_capacity=cfg.cs_capacity)
        fwd.fib.add_route(service_prefix(), toward_producer[name])
        topo.host(name).handler = fwd.handler
        result.forwarders[name] = fwd

    mode = cfg.estimator_mode or "goodput"
    max_gof = cfg.gofs if cfg.gofs is not None else None
    if max_gof is not None:
        max_gof = min(max_gof, max(store.catalog.gofs))
    for i, (cname, start) in enumerate(zip(topo.consumers, cfg.starts_ns())):
        local_cs = ContentStore(cfg.cs_capacity) if cfg.consumer_local_cs else None
        if local_cs is not None:
            result.local_stores.append(local_cs)
        result.consumers.append(Consumer(
            world, topo.host(cname), store.catalog, index=i,
            start_at_ns=start, window=cfg.window,
            budget_fraction=cfg.safety, max_gof=max_gof,
            local_cs=local_cs, estimator_mode=mode))


def _wire_dash(cfg: ScenarioConfig, topo: Topology, store: ProducerStore,
               result: RunResult) -> None:
    mode = cfg.estimator_mode or "capacity"
    max_gof = cfg.gofs if cfg.gofs is not None else None
    if max_gof is not None:
        max_gof = min(max_gof, max(store.catalog.gofs))
    net = wire_baseline(
        topo, store.catalog, variant=cfg.protocol,
        starts_ns=cfg.starts_ns(),
        cache_capacity_bytes=cfg.cache_capacity_bytes,
        safety=cfg.safety, max_gof=max_gof, estimator_mode=mode)
    result.baseline = net
    result.consumers.extend(net.consumers)


def run_scenario(cfg: ScenarioConfig, store: ProducerStore | None = None,
                 tracer=None) -> RunResult:
    """Build the world for cfg and run it to completion.

    A pre-built store may be supplied so sweeps encode the dataset once;
    it must match the scenario's dataset reference.
    """
    if store is None:
        store = load_dataset(cfg)
    world = SimWorld(seed=cfg.seed)
    if tracer is not None:
        world.tracer = tracer
    topo = _build_topology(cfg, world)
    result = RunResult(config=cfg, catalog=store.catalog, topo=topo,
                       world=world, consumers=[])
    if cfg.protocol == "inds":
        _wire_inds(cfg, topo, store, result)
    else:
        _wire_dash(cfg, topo, store, result)

    n_gofs = cfg.gofs if cfg.gofs is not None else len(store.catalog.gofs)
    horizon = (cfg.starts_ns()[-1]
               + n_gofs * store.catalog.gof_duration_ns
               + 120 * SEC)  # slack for retries and give-up deadlines
    world.run(horizon)
    return result
