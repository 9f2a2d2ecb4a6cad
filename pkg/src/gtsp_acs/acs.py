"""Hybrid Ant Colony System for the GTSP.

Each iteration every ant builds a tour (local pheromone updates as it
walks), the tour is improved by local search, the global best is updated
and reinforced. The run stops once the best tour has not improved for
``delta`` consecutive iterations.

Random numbers come from one :class:`numpy.random.Generator` (PCG64) per
run. Per ant the stream is consumed as: one integer for the start node,
then two uniforms per construction step (exploitation test, roulette).
"""

from __future__ import annotations

import enum
import json
import time
from dataclasses import asdict, dataclass, field
from typing import Callable, Iterable, TextIO

import numpy as np

from . import _kernels
from .heuristics import nearest_neighbor
from .instance import GtspInstance, Tour, make_tour
from .localsearch import improve, three_opt

# Lower bound on distances when computing visibility 1/d.
MIN_DISTANCE = 1e-6


class LocalSearch(str, enum.Enum):
    COMPOSITE = "composite"
    THREE_OPT = "3opt"
    NONE = "none"


class Denominator(str, enum.Enum):
    NODES = "n"
    CLUSTERS = "m"


class Tau0Rule(str, enum.Enum):
    # 1 / (size * w(T_NN)), size as chosen for the local update: the level the
    # local update decays towards
    ACS = "acs"
    # num_ants / w(T_NN)
    ANTS = "ants"


@dataclass(frozen=True)
class AcsParams:
    beta: float = 3.0
    rho: float = 0.4
    xi: float = 0.03
    q0: float = 0.0
    delta: int = 300
    num_ants: int = 10
    seed: int = 0
    local_search: LocalSearch = LocalSearch.COMPOSITE
    local_update_denominator: Denominator = Denominator.NODES
    tau0_rule: Tau0Rule = Tau0Rule.ACS
    quick_depth: int = 0  # optional first-improvement phase of 3-opt, see localsearch.QUICK_DEPTH
    max_iterations: int | None = None
    max_time: float | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "local_search", LocalSearch(self.local_search))
        object.__setattr__(self, "local_update_denominator", Denominator(self.local_update_denominator))
        object.__setattr__(self, "tau0_rule", Tau0Rule(self.tau0_rule))
        for name in ("rho", "xi", "q0"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {value}")
        if self.num_ants < 1:
            raise ValueError(f"num_ants must be >= 1, got {self.num_ants}")
        if self.delta < 1:
            raise ValueError(f"delta must be >= 1, got {self.delta}")
        if self.quick_depth < 0:
            raise ValueError(f"quick_depth must be >= 0, got {self.quick_depth}")
        if self.max_iterations is not None and self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["local_search"] = self.local_search.value
        d["local_update_denominator"] = self.local_update_denominator.value
        d["tau0_rule"] = self.tau0_rule.value
        return d


@dataclass
class PheromoneState:
    tau: np.ndarray
    tau0: float
    visibility: np.ndarray  # eta ** beta, fixed for the run

    def edge(self, u: int, v: int) -> float:
        return float(self.tau[u, v])


@dataclass
class Ant:
    path: list[int]
    visited_clusters: set[int]

    @classmethod
    def at(cls, instance: GtspInstance, node: int) -> "Ant":
        return cls([node], {int(instance.cluster_of[node])})

    @property
    def current(self) -> int:
        return self.path[-1]

    def move_to(self, instance: GtspInstance, node: int) -> None:
        self.path.append(node)
        self.visited_clusters.add(int(instance.cluster_of[node]))


@dataclass(frozen=True)
class CandidateScore:
    node: int
    eta: float
    a: float
    p: float


@dataclass
class TraceRecord:
    iteration: int
    iteration_best: float
    best: float
    elapsed_ms: float


@dataclass
class SearchState:
    best: Tour
    t_nn: Tour
    iteration: int = 0
    stagnation: int = 0
    greedy_choices: int = 0
    history: list[TraceRecord] = field(default_factory=list)


@dataclass
class RunResult:
    tour: Tour
    iterations: int
    elapsed: float
    t_nn: Tour
    tau0: float
    greedy_choices: int
    terminated_by_cap: bool
    params: AcsParams
    trace: list[TraceRecord]

    @property
    def weight(self) -> float:
        return self.tour.weight


def visibility(instance: GtspInstance, beta: float) -> np.ndarray:
    d = instance.arrays().dist
    eta = 1.0 / np.maximum(d, MIN_DISTANCE)
    out = eta**beta
    out[d < 0] = 0.0  # intra-cluster pairs
    return out


def _denominator(instance: GtspInstance, params: AcsParams) -> int:
    return instance.n if params.local_update_denominator is Denominator.NODES else instance.m


def initial_pheromone(instance: GtspInstance, params: AcsParams, w_nn: float) -> float:
    if params.tau0_rule is Tau0Rule.ANTS:
        return params.num_ants / w_nn
    return 1.0 / (_denominator(instance, params) * w_nn)


def init(instance: GtspInstance, params: AcsParams) -> tuple[PheromoneState, SearchState]:
    t_nn = nearest_neighbor(instance)
    tau0 = initial_pheromone(instance, params, t_nn.weight)
    tau = np.full((instance.n, instance.n), tau0)
    pheromone = PheromoneState(tau=tau, tau0=tau0, visibility=visibility(instance, params.beta))
    return pheromone, SearchState(best=t_nn, t_nn=t_nn)


def _used_mask(instance: GtspInstance, ant: Ant) -> np.ndarray:
    used = np.zeros(instance.m, dtype=np.bool_)
    used[list(ant.visited_clusters)] = True
    return used


def candidate_scores(instance: GtspInstance, ant: Ant, pheromone: PheromoneState, params: AcsParams) -> list[CandidateScore]:
    """Visibility, attractiveness and selection probability for each allowed node."""
    used = _used_mask(instance, ant)
    u = ant.current
    allowed = [v for v in range(instance.n) if not used[instance.cluster_of[v]]]
    d = instance.arrays().dist
    eta = [1.0 / max(d[u, v], MIN_DISTANCE) for v in allowed]
    a = [pheromone.tau[u, v] * pheromone.visibility[u, v] for v in allowed]
    total = sum(a)
    return [CandidateScore(v, e, x, x / total) for v, e, x in zip(allowed, eta, a)]


def select_next(
    instance: GtspInstance, ant: Ant, pheromone: PheromoneState, params: AcsParams, rng: np.random.Generator
) -> int:
    """Pseudo-random proportional choice of the ant's next node."""
    r_exploit, r_sample = rng.random(2)
    v, _ = _kernels.select_next(
        ant.current,
        pheromone.visibility,
        pheromone.tau,
        instance.arrays().cluster_of,
        _used_mask(instance, ant),
        params.q0,
        r_exploit,
        r_sample,
    )
    if v < 0:
        raise RuntimeError("no cluster left to visit; the ant's tour is already complete")
    return int(v)


def local_increment(instance: GtspInstance, params: AcsParams, w_nn: float) -> float:
    return params.xi / (_denominator(instance, params) * w_nn)


def local_update(
    pheromone: PheromoneState, u: int, v: int, params: AcsParams, instance: GtspInstance, state: SearchState
) -> None:
    _kernels.local_update(pheromone.tau, u, v, params.xi, local_increment(instance, params, state.t_nn.weight))


def global_update(pheromone: PheromoneState, best: Tour, params: AcsParams) -> None:
    """Evaporate and deposit on the edges of ``best`` only."""
    nodes = best.nodes
    edges = {tuple(sorted((nodes[i], nodes[(i + 1) % len(nodes)]))) for i in range(len(nodes))}
    deposit = params.rho / best.weight
    tau = pheromone.tau
    for u, v in edges:
        val = (1.0 - params.rho) * tau[u, v] + deposit
        tau[u, v] = val
        tau[v, u] = val


def construct_all(
    instance: GtspInstance,
    pheromone: PheromoneState,
    params: AcsParams,
    state: SearchState,
    rng: np.random.Generator,
) -> list[Tour]:
    """One tour per ant, built one ant after another."""
    arr = instance.arrays()
    inc = local_increment(instance, params, state.t_nn.weight)
    tours = []
    for _ in range(params.num_ants):
        start = int(rng.integers(instance.n))
        uniforms = rng.random(2 * (instance.m - 1))
        nodes, greedy = _kernels.construct_ant(
            start, pheromone.visibility, pheromone.tau, arr.cluster_of, instance.m, params.q0, params.xi, inc, uniforms
        )
        state.greedy_choices += greedy
        tours.append(make_tour(instance, nodes.tolist()))
    return tours


def _improver(params: AcsParams) -> Callable[[GtspInstance, Tour], Tour]:
    if params.local_search is LocalSearch.COMPOSITE:
        return lambda instance, tour: improve(instance, tour, params.quick_depth)
    if params.local_search is LocalSearch.THREE_OPT:
        return lambda instance, tour: three_opt(instance, tour, params.quick_depth)
    return lambda instance, tour: tour


def run(
    instance: GtspInstance,
    params: AcsParams = AcsParams(),
    trace_file: TextIO | None = None,
) -> RunResult:
    started = time.perf_counter()
    rng = np.random.default_rng(params.seed)
    pheromone, state = init(instance, params)
    improver = _improver(params)
    capped = False

    while True:
        state.iteration += 1
        tours = [improver(instance, t) for t in construct_all(instance, pheromone, params, state, rng)]
        it_best = min(tours, key=lambda t: t.weight)
        if it_best.weight < state.best.weight:
            state.best = it_best
            state.stagnation = 0
        else:
            state.stagnation += 1
        global_update(pheromone, state.best, params)

        elapsed = time.perf_counter() - started
        record = TraceRecord(state.iteration, it_best.weight, state.best.weight, 1000.0 * elapsed)
        state.history.append(record)
        if trace_file is not None:
            trace_file.write(json.dumps(asdict(record)) + "\n")

        if state.stagnation >= params.delta:
            break
        if params.max_iterations is not None and state.iteration >= params.max_iterations:
            capped = True
            break
        if params.max_time is not None and elapsed >= params.max_time:
            capped = True
            break

    return RunResult(
        tour=state.best,
        iterations=state.iteration,
        elapsed=time.perf_counter() - started,
        t_nn=state.t_nn,
        tau0=pheromone.tau0,
        greedy_choices=state.greedy_choices,
        terminated_by_cap=capped,
        params=params,
        trace=state.history,
    )


def write_trace(records: Iterable[TraceRecord], fh: TextIO) -> None:
    for r in records:
        fh.write(json.dumps(asdict(r)) + "\n")
