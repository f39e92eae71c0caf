"""Tests for instance generators, the pipeline driver and the experiment runner."""
import math

import networkx as nx
import numpy as np
import pytest
from pydantic import ValidationError

from src.assignment import Parameters
from src.embedding import brute_force_embed, verify_embedding
from src.errors import ArgumentError, GenerationError
from src.graph import Graph, components, max_degree, min_degree
from src.harness import (
    STAGES,
    ExperimentCell,
    ExperimentRecord,
    HostSpec,
    SubgraphSpec,
    build_instance,
    generate_H,
    generate_host,
    replay_record,
    reverify_archived,
    run_experiment,
    run_pipeline,
    trial_seeds,
)
from src.separability import Separation, verify_separation
from src.utils import read_json, write_json

SMALL_HOST = HostSpec(ell=4, m=10, k=2, seed=1)
PATHS = SubgraphSpec(family="component-union", component="path", component_size=4, max_degree=2, seed=2)


def small_record(seed: int = 7) -> ExperimentRecord:
    host, sub, h_spec = build_instance(SMALL_HOST, PATHS)
    return run_pipeline(
        sub.graph,
        host.graph,
        Parameters(k=2),
        seed,
        planted=host,
        separation=sub.separation,
        host_spec=SMALL_HOST,
        h_spec=h_spec,
    )


class TestGenerateHost:
    """Test planted host generation."""

    def test_single_vertex_clusters_give_the_pattern(self):
        """Test that m = 1 collapses the blow-up to the complete pattern."""
        host = generate_host(HostSpec(ell=10, m=1, k=3, seed=0))
        assert host.graph.n == 10
        assert host.graph.num_edges == 45
        assert host.repairs == 0

    def test_minimum_degree_promise(self):
        """Test the degree bound on a 300-vertex planted host."""
        spec = HostSpec(ell=6, m=50, k=3, d_pair=0.5, seed=11)
        host = generate_host(spec)
        assert host.graph.n == 303
        assert len(host.partition.V0) == 3
        assert min_degree(host.graph) >= math.ceil(spec.min_degree_fraction() * 303 - 1e-9)
        host.partition.validate()
        assert host.factor.cliques == ((0, 1, 2), (3, 4, 5))

    def test_seed_determinism(self):
        """Test that a fixed seed reproduces the edge list."""
        spec = HostSpec(ell=4, m=8, k=2, pattern="random", seed=42)
        assert sorted(generate_host(spec).graph.edges) == sorted(generate_host(spec).graph.edges)

    def test_random_pattern_keeps_factor_threshold(self):
        """Test that a sparse random reduced pattern is topped up to (1 - 1/k) ell."""
        host = generate_host(HostSpec(ell=9, m=6, k=2, pattern="random", pattern_density=0.3, seed=3))
        assert min_degree(host.pattern) >= 5
        assert len(host.factor.cliques) == 4
        for clique in host.factor.cliques:
            assert all(host.pattern.has_edge(a, b) for a in clique for b in clique if a < b)

    def test_unreachable_degree_target(self):
        """Test that a target no blow-up can carry is rejected before sampling."""
        with pytest.raises(GenerationError):
            generate_host(HostSpec(ell=6, m=10, k=2, gamma=0.45, seed=0))

    def test_fewer_clusters_than_k(self):
        """Test that a clique cannot be planted on too few clusters."""
        with pytest.raises(ValidationError):
            HostSpec(ell=2, m=5, k=3)


class TestGenerateH:
    """Test pattern families and their witnesses."""

    def test_grid_middle_row(self):
        """Test the 10x10 grid witness."""
        sub = generate_H(SubgraphSpec(family="grid", rows=10, cols=10))
        assert max_degree(sub.graph) == 4
        assert nx.is_bipartite(sub.graph.to_networkx())
        assert len(sub.separation.S) == 10
        assert max(len(c) for c in sub.separation.components) <= 50
        assert verify_separation(sub.graph, sub.separation, 0.5)

    def test_partial_grid(self):
        """Test that n not a rectangle fills the last row partially."""
        sub = generate_H(SubgraphSpec(family="grid", n=40))
        assert sub.graph.n == 40
        assert max_degree(sub.graph) <= 4

    def test_matchings_union_is_regular(self):
        """Test that five disjoint perfect matchings on 6 + 6 vertices are 5-regular."""
        sub = generate_H(SubgraphSpec(family="matchings-union", n=12, matchings=5, max_degree=5, seed=4))
        h = sub.graph
        assert h.n == 12
        assert all(len(h.adjacency[v]) == 5 for v in h.vertices())
        assert all(u < 6 <= v for u, v in h.edges)

    def test_too_many_matchings(self):
        """Test that d above the side size is rejected."""
        with pytest.raises(GenerationError):
            generate_H(SubgraphSpec(family="matchings-union", n=8, matchings=5, seed=0))

    def test_odd_order_matchings_union(self):
        """Test that an odd vertex count is refused instead of silently dropping a vertex."""
        with pytest.raises(GenerationError):
            generate_H(SubgraphSpec(family="matchings-union", n=13, matchings=3, seed=0))

    @pytest.mark.parametrize(
        "spec",
        [
            SubgraphSpec(family="grid", rows=4, cols=4, max_degree=3),
            SubgraphSpec(family="bandwidth-path-power", n=64, bandwidth=3, beta=1 / 16),
            SubgraphSpec(family="matchings-union", n=12, matchings=5, seed=4),
        ],
    )
    def test_degree_cap_applies_to_every_family(self, spec):
        """Test that no family returns a graph above its max_degree."""
        with pytest.raises(GenerationError):
            generate_H(spec)

    def test_oversized_component_fails_the_witness(self):
        """Test that components larger than alpha * n are refused by the witness check."""
        with pytest.raises(GenerationError):
            generate_H(SubgraphSpec(family="component-union", n=20, component_size=10, alpha=0.25))

    def test_triangle_union(self):
        """Test disjoint triangles with an empty separator."""
        sub = generate_H(SubgraphSpec(family="component-union", n=12, component="clique", max_degree=2))
        assert sub.separation.S == frozenset()
        assert sorted(len(c) for c in sub.separation.components) == [3, 3, 3, 3]
        assert sub.graph.num_edges == 12

    def test_component_union_with_separator(self):
        """Test that separator vertices respect the degree cap."""
        sub = generate_H(
            SubgraphSpec(family="component-union", n=40, component_size=5, separator_size=4, seed=9)
        )
        assert sub.separation.S == frozenset(range(36, 40))
        assert max_degree(sub.graph) <= 4
        assert sorted(sorted(c) for c in sub.separation.components) == sorted(
            c.to_list() for c in components(sub.graph, sub.separation.S)
        )

    def test_forest_centroids(self):
        """Test that centroid removal leaves parts of at most alpha * n vertices."""
        sub = generate_H(SubgraphSpec(family="forest", n=60, alpha=0.2, seed=5))
        assert max_degree(sub.graph) <= 4
        assert all(len(c) <= 12 for c in sub.separation.components)
        assert nx.is_forest(sub.graph.to_networkx())

    def test_path_power_ordering(self):
        """Test that the bandwidth family carries its ordering and interval separator."""
        sub = generate_H(SubgraphSpec(family="bandwidth-path-power", n=64, bandwidth=2, beta=1 / 16))
        assert sub.ordering.width == 2
        assert verify_separation(sub.graph, sub.separation, sub.separation.alpha_certificate)

    def test_bandwidth_above_beta(self):
        """Test that a bandwidth above beta * n is rejected."""
        with pytest.raises(GenerationError):
            generate_H(SubgraphSpec(family="bandwidth-path-power", n=32, bandwidth=4, beta=1 / 16))


class TestRunPipeline:
    """Test stage recording of the pipeline driver."""

    def test_vertex_count_mismatch(self):
        """Test that a non-spanning H stops at the precondition stage."""
        record = run_pipeline(Graph.path(3), Graph.complete(4), Parameters(k=2), seed=0)
        assert not record.success
        assert record.failed_stage == "precondition"
        assert record.stage("precondition").error["type"] == "ArgumentError"
        assert len(record.stages) == 1

    def test_too_many_colors(self):
        """Test that chi(H) > k is rejected at the coloring stage."""
        record = run_pipeline(Graph.complete(4), Graph.complete(4), Parameters(k=3), seed=0)
        assert record.failed_stage == "coloring"
        assert record.stage("coloring").error["type"] == "PreconditionError"
        assert record.stage("coloring").error["context"]["colors"] == 4

    def test_regime_warnings_are_recorded(self):
        """Test that violated parameter orderings become warnings, not failures."""
        record = run_pipeline(Graph.path(4), Graph.complete(4), Parameters(k=2), seed=0, stop_after="precondition")
        assert record.success
        assert any(w.startswith("parameter regime") for w in record.warnings)

    def test_stop_after_separation(self):
        """Test a run cut short after the separation stage."""
        record = run_pipeline(
            Graph.path(16), Graph.complete(16), Parameters(k=2, alpha=0.25), seed=0, stop_after="separation"
        )
        assert record.success
        assert record.stopped_after == "separation"
        assert [s.name for s in record.stages] == ["precondition", "coloring", "separation"]
        assert record.embedding is None
        assert "separation" in record.certificates

    def test_unknown_stage(self):
        """Test that stop_after must name a stage."""
        with pytest.raises(ArgumentError):
            run_pipeline(Graph.path(2), Graph.complete(2), stop_after="teleport")

    def test_stages_follow_the_pipeline_order(self):
        """Test that a planted run passes every stage in order and embeds H."""
        record = small_record()
        assert record.success, record.failed_stage
        assert [s.name for s in record.stages] == list(STAGES)
        assert all(s.ok for s in record.stages)
        host, sub, _ = build_instance(SMALL_HOST, PATHS)
        assert verify_embedding(sub.graph, host.graph, record.embedding)

    def test_planted_partition_is_recertified(self):
        """Test that re-certifying a planted 50-vertex-cluster host keeps every pattern pair."""
        host, sub, h_spec = build_instance(HostSpec(ell=4, m=50, k=2, seed=0), PATHS.model_copy(update={"seed": 3}))
        record = run_pipeline(
            sub.graph, host.graph, Parameters(k=2), 11, planted=host, separation=sub.separation, stop_after="factor"
        )
        assert record.success, record.failed_stage
        assert record.stage("reduced-graph").detail["edges"] == 6

    def test_failed_witness_without_separator(self):
        """Test that K_{12,12} stops at the separation stage although a witness was supplied."""
        h = Graph.from_networkx(nx.complete_bipartite_graph(12, 12))
        g = Graph.complete(24)
        bogus = Separation.build([], [range(24)], 24)
        record = run_pipeline(h, g, Parameters(k=2, alpha=0.25), seed=0, separation=bogus)
        assert record.failed_stage == "separation"
        error = record.stage("separation").error
        assert error["type"] == "PreconditionError"
        assert "supplied" in error["message"]

    def test_record_round_trip(self):
        """Test that a serialized record keeps its timing-free outcome."""
        record = small_record()
        assert ExperimentRecord.from_dict(record.to_dict()).outcome() == record.outcome()

    def test_replay_is_identical(self):
        """Test that rerunning from the record's seeds reproduces the outcome."""
        record = small_record(seed=3)
        assert replay_record(record).outcome() == record.outcome()

    def test_replay_needs_specs(self):
        """Test that a record without generator specs cannot be replayed."""
        record = run_pipeline(Graph.path(3), Graph.complete(4), Parameters(k=2), seed=0)
        with pytest.raises(ArgumentError):
            replay_record(record)


class TestExperiment:
    """Test the seeded experiment runner."""

    def test_trial_seeds(self):
        """Test that trial seeds are reproducible and pairwise distinct."""
        seeds = trial_seeds(3, 2, 4)
        assert len(seeds) == 2 and all(len(row) == 4 for row in seeds)
        assert seeds == trial_seeds(3, 2, 4)
        assert seeds != trial_seeds(4, 2, 4)
        flat = [s for row in seeds for s in row]
        assert len(set(flat)) == 8

    def test_empty_matrix(self, tmp_path):
        """Test that no cells give an empty summary on disk."""
        summary = run_experiment([], trials=3, seed=0, output_dir=tmp_path)
        assert summary.empty
        assert (tmp_path / "summary.csv").exists()
        assert read_json(tmp_path / "summary.json") == []

    def test_negative_trials(self, tmp_path):
        """Test that the trial count must be non-negative."""
        with pytest.raises(ArgumentError):
            run_experiment([], trials=-1, output_dir=tmp_path)

    def test_single_cell(self, tmp_path):
        """Test one cell with one trial."""
        cell = ExperimentCell(host=SMALL_HOST, h=PATHS, params=Parameters(k=2), label="paths")
        summary = run_experiment([cell], trials=1, seed=5, output_dir=tmp_path)
        row = summary.iloc[0]
        assert len(summary) == 1
        assert row["label"] == "paths"
        assert row["trials"] == 1
        failures = sum(row[c] for c in summary.columns if c.startswith("failed_"))
        assert row["successes"] + failures == 1
        assert row["reverified"] == row["successes"]
        record = read_json(tmp_path / "records" / "cell0_trial0.json")
        assert record["h_spec"]["n"] == 40
        assert record["success"] == bool(row["successes"])

    def test_generation_failure_is_recorded(self, tmp_path):
        """Test that an unreachable host spec becomes a failed 'generate' record."""
        cell = ExperimentCell(host=HostSpec(ell=6, m=10, k=2, gamma=0.45), h=PATHS, params=Parameters(k=2))
        summary = run_experiment([cell], trials=2, seed=1, output_dir=tmp_path)
        assert summary.iloc[0]["failed_generate"] == 2
        assert summary.iloc[0]["successes"] == 0

    def test_reverify_archived(self, tmp_path):
        """Test that an archived record is re-checked against its regenerated instance."""
        record = small_record()
        path = write_json(record.to_dict(), tmp_path / "record.json")
        assert reverify_archived(path) is record.success

        tampered = record.to_dict()
        tampered["success"] = True
        tampered["embedding"] = [0] * 40
        assert reverify_archived(write_json(tampered, tmp_path / "tampered.json")) is False


@pytest.mark.slow
class TestAcceptance:
    """Monte Carlo runs over planted hosts."""

    @pytest.mark.parametrize("family", ["grid", "forest", "component-union"])
    def test_planted_runs_are_consistent(self, tmp_path, family):
        """Test that at least 95% of runs succeed and every success re-verifies from its archive."""
        h = SubgraphSpec(family=family, max_degree=4, component="path", component_size=20)
        cell = ExperimentCell(host=HostSpec(ell=4, m=50, k=2, gamma=0.1, d_pair=0.5), h=h, params=Parameters(k=2))
        summary = run_experiment([cell], trials=20, seed=2024, output_dir=tmp_path)
        row = summary.iloc[0]
        failures = sum(row[c] for c in summary.columns if c.startswith("failed_"))
        assert row["successes"] + failures == 20
        assert row["reverified"] == row["successes"]
        assert row["success_rate"] >= 0.95

    def test_planted_matrix_success_rate(self, tmp_path):
        """Test the success floor over l in {4, 6}, k in {2, 3} and three H families."""
        cells = [
            ExperimentCell(
                host=HostSpec(ell=ell, m=50, k=k, gamma=0.1, d_pair=0.5),
                h=SubgraphSpec(family=family, max_degree=4, component="path", component_size=4),
                params=Parameters(k=k),
                label=f"{family}-l{ell}-k{k}",
            )
            for ell in (4, 6)
            for k in (2, 3)
            for family in ("grid", "forest", "component-union")
        ]
        summary = run_experiment(cells, trials=8, seed=7, output_dir=tmp_path)
        assert summary["trials"].sum() == 8 * len(cells)
        assert (summary["reverified"] == summary["successes"]).all()
        assert summary["successes"].sum() >= 0.95 * 8 * len(cells)
        assert summary["failed_generate"].sum() == 0

    def test_grid_into_hundred_vertex_host(self, tmp_path):
        """Test the 10x10 grid into a planted host on 100 vertices with k = 2."""
        cell = ExperimentCell(
            host=HostSpec(ell=4, m=25, k=2, v0_fraction=0.0),
            h=SubgraphSpec(family="grid", rows=10, cols=10),
            params=Parameters(k=2),
        )
        summary = run_experiment([cell], trials=20, seed=100, output_dir=tmp_path)
        row = summary.iloc[0]
        assert read_json(tmp_path / "records" / "cell0_trial0.json")["h_spec"]["n"] == 100
        assert row["reverified"] == row["successes"]
        assert row["success_rate"] >= 0.95

    def test_tiny_instances_agree_with_oracle(self):
        """Test that no verified pipeline success contradicts the exact oracle."""
        rng = np.random.default_rng(9)
        for trial in range(300):
            n = int(rng.integers(2, 11))
            h = Graph.from_networkx(nx.gnp_random_graph(n, 0.2, seed=int(rng.integers(2**31))))
            g = Graph.from_networkx(nx.gnp_random_graph(n, 0.8, seed=int(rng.integers(2**31))))
            record = run_pipeline(h, g, Parameters(k=2, alpha=1.0), seed=trial)
            if record.success:
                assert verify_embedding(h, g, record.embedding)
                assert brute_force_embed(h, g) is not None


@pytest.mark.slow
class TestPlantedStageBounds:
    """Stage-level guarantees on planted hosts with 50-vertex clusters."""

    @pytest.mark.parametrize("ell,k", [(4, 2), (6, 3)])
    def test_stage_bounds(self, ell, k):
        """Test discards, F1 degrees, map deviation and balancing moves against their bounds."""
        host_spec = HostSpec(ell=ell, m=50, k=k, seed=5)
        h_spec = PATHS.model_copy(update={"seed": 6})
        host, sub, h_spec = build_instance(host_spec, h_spec)
        params = Parameters(k=k)
        record = run_pipeline(sub.graph, host.graph, params, 13, planted=host, separation=sub.separation)
        assert record.success, record.failed_stage
        m = record.stage("decompose").detail["m"]
        assert record.stage("super-regularize").detail["discarded_per_cluster"] <= params.eps * m
        distribute = record.stage("distribute").detail
        assert distribute["min_left_degree"] == ell
        assert distribute["min_left_degree"] >= (0.5 + max(params.gamma_double_prime, 0)) * ell
        assert record.stage("map").detail["deviation"] < 5 * params.eps * k * m
        assert record.stage("balance").detail["moves"] <= 5 * params.eps * k * ell * m
        assert record.stage("restrictions").ok

    def test_balancing_moves_stay_bounded(self):
        """Test at most 5 eps k l m balancing moves over 100 seeded runs on one planted instance."""
        host, sub, _ = build_instance(HostSpec(ell=4, m=50, k=2, seed=8), PATHS.model_copy(update={"seed": 9}))
        params = Parameters(k=2)
        bound = 5 * params.eps * 2 * 4 * 50
        for seed in range(100):
            record = run_pipeline(
                sub.graph, host.graph, params, seed, planted=host, separation=sub.separation, stop_after="balance"
            )
            assert record.success, (seed, record.failed_stage)
            assert record.stage("balance").detail["moves"] <= bound
