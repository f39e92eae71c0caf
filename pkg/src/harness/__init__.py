"""Instance generators, the end-to-end pipeline and the experiment runner."""

from .experiment import ExperimentCell, reverify_archived, run_experiment, summarize, trial_seeds
from .generators import (
    GeneratedSubgraph,
    HostSpec,
    PlantedHost,
    SubgraphSpec,
    complete_multipartite,
    generate_H,
    generate_host,
)
from .pipeline import STAGES, ExperimentRecord, StageOutcome, build_instance, replay_record, run_pipeline

__all__ = [
    "STAGES",
    "ExperimentCell",
    "ExperimentRecord",
    "GeneratedSubgraph",
    "HostSpec",
    "PlantedHost",
    "StageOutcome",
    "SubgraphSpec",
    "build_instance",
    "complete_multipartite",
    "generate_H",
    "generate_host",
    "replay_record",
    "reverify_archived",
    "run_experiment",
    "run_pipeline",
    "summarize",
    "trial_seeds",
]
