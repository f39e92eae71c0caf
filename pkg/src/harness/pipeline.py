"""End-to-end driver: decompose G, assign and balance H, embed, verify."""
import logging
import time
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Tuple

import numpy as np

from src.assignment import (
    Parameters,
    alpha_threshold,
    balance_loads,
    build_F1,
    build_F2,
    distribute_V0,
    map_balanced,
    reassign_all,
    solve_assignment_lp,
)
from src.embedding import build_restrictions, crowded_clusters, embed_cliquewise, verify_embedding
from src.errors import ArgumentError, HostRegimeError, InconsistencyError, PreconditionError, WellsepError
from src.factor import find_kfactor
from src.graph import Graph, chromatic_upper, max_degree
from src.regularity import (
    degree_form_prune,
    reduced_graph,
    restrict_to_clusters,
    singleton_partition,
    super_regularize,
)
from src.separability import Separation, find_separator, verify_separation

from .generators import GeneratedSubgraph, HostSpec, PlantedHost, SubgraphSpec, generate_H, generate_host

logger = logging.getLogger(__name__)

STAGES = (
    "precondition",
    "coloring",
    "separation",
    "decompose",
    "reduced-graph",
    "factor",
    "super-regularize",
    "lp",
    "distribute",
    "map",
    "reassign",
    "balance",
    "restrictions",
    "embed",
    "verify",
)


@dataclass
class StageOutcome:
    name: str
    ok: bool
    seconds: float
    detail: Dict[str, Any] = field(default_factory=dict)
    error: Optional[Dict[str, Any]] = None

    def to_dict(self) -> Dict[str, Any]:
        return {
            "name": self.name,
            "ok": self.ok,
            "seconds": self.seconds,
            "detail": self.detail,
            "error": self.error,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "StageOutcome":
        return cls(data["name"], data["ok"], data["seconds"], data.get("detail", {}), data.get("error"))


@dataclass
class ExperimentRecord:
    """Everything one pipeline run produced, enough to replay it from its specs."""

    seed: Optional[int]
    params: Dict[str, Any]
    host_spec: Optional[Dict[str, Any]] = None
    h_spec: Optional[Dict[str, Any]] = None
    trust_partition: bool = False
    stages: List[StageOutcome] = field(default_factory=list)
    warnings: List[str] = field(default_factory=list)
    certificates: Dict[str, Any] = field(default_factory=dict)
    embedding: Optional[List[int]] = None
    success: bool = False
    stopped_after: Optional[str] = None

    @property
    def failed_stage(self) -> Optional[str]:
        for stage in self.stages:
            if not stage.ok:
                return stage.name
        return None

    @property
    def seconds(self) -> float:
        return sum(stage.seconds for stage in self.stages)

    def stage(self, name: str) -> Optional[StageOutcome]:
        return next((s for s in self.stages if s.name == name), None)

    def outcome(self) -> Tuple[Any, ...]:
        """Timing-free summary; two runs of the same record must agree on it."""
        return (
            self.success,
            tuple((s.name, s.ok, s.error["type"] if s.error else None) for s in self.stages),
            tuple(self.embedding) if self.embedding is not None else None,
        )

    def to_dict(self) -> Dict[str, Any]:
        """Convert to dictionary for serialization."""
        return {
            "seed": self.seed,
            "params": self.params,
            "host_spec": self.host_spec,
            "h_spec": self.h_spec,
            "trust_partition": self.trust_partition,
            "success": self.success,
            "failed_stage": self.failed_stage,
            "seconds": self.seconds,
            "stages": [s.to_dict() for s in self.stages],
            "warnings": self.warnings,
            "certificates": self.certificates,
            "embedding": self.embedding,
            "stopped_after": self.stopped_after,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "ExperimentRecord":
        return cls(
            seed=data.get("seed"),
            params=data["params"],
            host_spec=data.get("host_spec"),
            h_spec=data.get("h_spec"),
            trust_partition=data.get("trust_partition", False),
            stages=[StageOutcome.from_dict(s) for s in data.get("stages", [])],
            warnings=list(data.get("warnings", [])),
            certificates=data.get("certificates", {}),
            embedding=data.get("embedding"),
            success=data.get("success", False),
            stopped_after=data.get("stopped_after"),
        )


class _StageFailed(Exception):
    pass


class _Stop(Exception):
    pass


class _Run:
    """Times stages and turns their exceptions into failed outcomes."""

    def __init__(self, record: ExperimentRecord, stop_after: Optional[str] = None):
        self.record = record
        self.stop_after = stop_after

    def stage(self, name: str, body: Callable[[], Tuple[Any, Dict[str, Any]]]) -> Any:
        start = time.perf_counter()
        try:
            value, detail = body()
        except WellsepError as e:
            elapsed = time.perf_counter() - start
            self.record.stages.append(StageOutcome(name, False, elapsed, error=e.to_dict()))
            logger.error(f"Stage {name} failed: {e}")
            raise _StageFailed(name) from e
        except Exception as e:
            elapsed = time.perf_counter() - start
            error = {"type": type(e).__name__, "message": str(e), "context": {}}
            self.record.stages.append(StageOutcome(name, False, elapsed, error=error))
            logger.error(f"Stage {name} crashed: {e}", exc_info=True)
            raise _StageFailed(name) from e
        elapsed = time.perf_counter() - start
        self.record.stages.append(StageOutcome(name, True, elapsed, detail))
        logger.info(f"Stage {name} done in {elapsed:.3f}s")
        if name == self.stop_after:
            raise _Stop(name)
        return value

    def warn(self, message: str) -> None:
        logger.warning(message)
        self.record.warnings.append(message)


def _induced_on(graph: Graph, keep: List[int]) -> Graph:
    index = {old: new for new, old in enumerate(keep)}
    return Graph(len(keep), ((index[u], index[v]) for u, v in graph.edges if u in index and v in index))


def run_pipeline(
    h: Graph,
    g: Graph,
    params: Optional[Parameters] = None,
    seed: Optional[int] = None,
    planted: Optional[PlantedHost] = None,
    separation: Optional[Separation] = None,
    trust_partition: bool = False,
    host_spec: Optional[HostSpec] = None,
    h_spec: Optional[SubgraphSpec] = None,
    stop_after: Optional[str] = None,
) -> ExperimentRecord:
    """Embed the spanning graph ``h`` into ``g`` and record every stage.

    With a planted host the planted clusters are re-pruned and re-certified by sampling
    (or used with their attached certificates when ``trust_partition``); otherwise every
    vertex is its own cluster. A supplied ``separation`` is used when it verifies at
    alpha, else the search runs and its failure stops the run. The record is returned
    whether or not a stage fails; ``success`` means the final independent check passed,
    or, with ``stop_after``, that every stage up to the named one succeeded.
    """
    if stop_after is not None and stop_after not in STAGES:
        raise ArgumentError(f"unknown stage {stop_after!r}; stages are {', '.join(STAGES)}")
    params = params or Parameters()
    rng = np.random.default_rng(seed)
    record = ExperimentRecord(
        seed=seed,
        params=params.model_dump(),
        host_spec=host_spec.model_dump() if host_spec else None,
        h_spec=h_spec.model_dump() if h_spec else None,
        trust_partition=trust_partition,
    )
    run = _Run(record, stop_after)
    try:
        _execute(run, h, g, params, rng, planted, separation, trust_partition)
    except _StageFailed as e:
        logger.info(f"Pipeline stopped at stage {e}")
    except _Stop as e:
        record.stopped_after = str(e)
        record.success = True
    return record


def _execute(
    run: _Run,
    h: Graph,
    g: Graph,
    params: Parameters,
    rng: np.random.Generator,
    planted: Optional[PlantedHost],
    separation: Optional[Separation],
    trust_partition: bool,
) -> None:
    record = run.record
    k = params.k

    def precondition():
        if h.n != g.n:
            raise ArgumentError(f"H has {h.n} vertices but G has {g.n}; the embedding must be spanning")
        problems = params.check_ordering()
        record.warnings.extend(f"parameter regime: {p}" for p in problems)
        return None, {"n": h.n, "regime_warnings": len(problems)}

    run.stage("precondition", precondition)

    def coloring_stage():
        coloring = chromatic_upper(h)
        if coloring.k > k:
            raise PreconditionError(
                f"H needs {coloring.k} colors{' (exact)' if coloring.exact else ''}, more than k = {k}",
                {"colors": coloring.k, "exact": coloring.exact},
            )
        return coloring, {"colors": coloring.k, "exact": coloring.exact}

    coloring = run.stage("coloring", coloring_stage)

    def separation_stage():
        if separation is not None and verify_separation(h, separation, params.alpha):
            sep = separation
        else:
            sep = find_separator(h, params.alpha)
            if sep is None:
                supplied = " and the supplied one does not verify" if separation is not None else ""
                raise PreconditionError(f"no {params.alpha}-separation of H was found{supplied}")
        record.certificates["separation"] = sep.to_dict()
        return sep, {"S": len(sep.S), "parts": len(sep.components), "alpha_certificate": sep.alpha_certificate}

    sep = run.stage("separation", separation_stage)

    def decompose():
        if planted is not None and trust_partition:
            part = planted.partition
        elif planted is not None:
            part = degree_form_prune(
                g,
                planted.partition.clusters,
                params.d,
                params.eps,
                V0=planted.partition.V0,
                rng=rng,
                method="sampled",
            )
        else:
            part = singleton_partition(g, params.d, params.eps)
        record.certificates["partition"] = part.to_dict(with_certificates=False)
        return part, {"ell": part.ell, "m": part.m, "V0": len(part.V0)}

    part = run.stage("decompose", decompose)

    def reduce():
        reduced = reduced_graph(part, params.d, params.edge_rule, rng)
        record.certificates["degree_bound"] = reduced.degree_bound.to_dict()
        if not reduced.degree_bound.holds:
            record.warnings.append(f"reduced graph minimum degree below {reduced.degree_bound.bound:.2f}")
        return reduced, {"edges": reduced.graph.num_edges, "min_degree": reduced.degree_bound.min_degree}

    reduced = run.stage("reduced-graph", reduce)

    def factor_stage():
        factor = find_kfactor(reduced.graph, k)
        if factor is None:
            raise HostRegimeError(f"the reduced graph on {reduced.graph.n} clusters has no K_{k}-factor")
        record.certificates["factor"] = factor.to_dict()
        keep = factor.covered
        restricted = restrict_to_clusters(part, keep) if factor.leftover else part
        gr = _induced_on(reduced.graph, keep) if factor.leftover else reduced.graph
        relabelled = factor.relabel({old: new for new, old in enumerate(keep)})
        threshold = alpha_threshold(params.eps, restricted.ell, max_degree(h) if h.n else 0, k)
        record.certificates["alpha_threshold"] = threshold.to_dict()
        if not threshold.admits(sep.alpha_certificate):
            run.warn(
                f"separation certificate {sep.alpha_certificate:.4f} exceeds the alpha threshold {threshold.value:.3g}"
            )
        detail = {"cliques": len(factor.cliques), "leftover": len(factor.leftover)}
        return (restricted, gr, relabelled), detail

    part, gr, factor = run.stage("factor", factor_stage)

    delta = params.delta_value

    def regularize():
        result = super_regularize(part, factor, delta)
        return result, {"discarded_per_cluster": result.discarded, "eps_prime": result.eps_prime, "V0": len(result.V0)}

    part = run.stage("super-regularize", regularize)

    def lp_stage():
        gamma2 = params.gamma_double_prime
        if gamma2 < 0:
            run.warn(f"gamma'' = {gamma2:.3g} is negative; the assignment LP is skipped")
            return None, {"skipped": True}
        result = solve_assignment_lp(k, gamma2)
        record.certificates["lp"] = result.to_dict()
        return result, {"optimum": result.optimum, "feasible": result.feasible}

    run.stage("lp", lp_stage)

    def distribute():
        f1 = build_F1(g, part, factor, delta)
        result = distribute_V0(g, part, factor, f1, rng)
        sizes = [len(c) for c in result.clusters]
        return result, {"V0": len(f1.left), "min_left_degree": f1.min_left_degree, "spread": max(sizes) - min(sizes)}

    part = run.stage("distribute", distribute)

    def mapping_stage():
        sizes = [len(c) for c in part.clusters]
        limit = 5 * params.eps * k * part.m
        mapping, attempts, deviation = map_balanced(h, sep, coloring, factor, sizes, limit, rng)
        loads = mapping.kappa.loads()
        detail = {"max_load": int(loads.max()), "min_load": int(loads.min()), "attempts": attempts}
        return mapping, {**detail, "deviation": deviation}

    mapping = run.stage("map", mapping_stage)

    def reassign():
        report = reassign_all(h, sep, coloring, mapping, factor, gr, rng)
        record.certificates["reassignment"] = report.to_dict()
        detail = {"reassigned": len(report.reassigned), "exact_fallbacks": report.exact_fallbacks}
        return report, {**detail, "locality_exceptions": report.locality_exceptions}

    run.stage("reassign", reassign)
    kappa = mapping.kappa

    def balance():
        f2 = build_F2(gr, factor)
        result, report = balance_loads(g, part, kappa, factor, f2, rng, delta)
        record.certificates["balance"] = report.to_dict()
        record.certificates["assignment"] = {"kappa": kappa.to_list(), "clusters": [sorted(c) for c in result.clusters]}
        record.warnings.extend(report.precondition_warnings)
        return result, {"moves": report.total_moves}

    core = part.clusters
    part = run.stage("balance", balance)

    def restrict():
        restrictions = build_restrictions(h, kappa, part, factor, core=core)
        crowded = crowded_clusters(restrictions, part)
        for c, count in sorted(crowded.items()):
            record.warnings.append(f"cluster {c} carries {count} restricted vertices, above alpha_BL")
        return restrictions, {"restricted": len(restrictions), "crowded_clusters": len(crowded)}

    restrictions = run.stage("restrictions", restrict)

    def embed():
        embedding = embed_cliquewise(h, g, kappa, part, factor, restrictions, rng, params.rho)
        return embedding, {}

    embedding = run.stage("embed", embed)

    def verify():
        verdict = verify_embedding(h, g, embedding.phi)
        if not verdict:
            raise InconsistencyError(f"embedding rejected: {verdict.violation}")
        return verdict, {}

    run.stage("verify", verify)
    record.embedding = embedding.to_list()
    record.success = True


def build_instance(host_spec: HostSpec, h_spec: SubgraphSpec) -> Tuple[PlantedHost, GeneratedSubgraph, SubgraphSpec]:
    """Generate a planted host and a spanning H for it, each from its own spec seed.

    The H spec's ``n`` is set to the host order unless explicit grid dimensions fix it;
    the adjusted spec is returned so records replay the same instance.
    """
    host = generate_host(host_spec)
    if h_spec.n != host.graph.n and not (h_spec.rows and h_spec.cols):
        h_spec = h_spec.model_copy(update={"n": host.graph.n})
    return host, generate_H(h_spec), h_spec


def replay_record(record: ExperimentRecord) -> ExperimentRecord:
    """Regenerate host and H from the record's specs and seeds and rerun the pipeline."""
    if record.host_spec is None or record.h_spec is None:
        raise ArgumentError("only records produced from generator specs can be replayed")
    host_spec = HostSpec(**record.host_spec)
    h_spec = SubgraphSpec(**record.h_spec)
    if host_spec.seed is None or h_spec.seed is None:
        raise ArgumentError("record specs carry no generator seeds")
    host, sub, h_spec = build_instance(host_spec, h_spec)
    return run_pipeline(
        sub.graph,
        host.graph,
        Parameters(**record.params),
        record.seed,
        planted=host,
        separation=sub.separation,
        trust_partition=record.trust_partition,
        host_spec=host_spec,
        h_spec=h_spec,
    )
