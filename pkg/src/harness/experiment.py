"""Seeded experiment runner: trials over a matrix of specs, summary table, record archive."""
import logging
from concurrent.futures import ProcessPoolExecutor, as_completed
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, Field

from config import settings
from src.assignment import Parameters
from src.embedding import verify_embedding
from src.errors import ArgumentError, WellsepError
from src.utils import read_json, write_json

from .generators import HostSpec, SubgraphSpec
from .pipeline import STAGES, ExperimentRecord, StageOutcome, build_instance, run_pipeline

logger = logging.getLogger(__name__)

SUMMARY_COLUMNS = [
    "cell",
    "label",
    "family",
    "ell",
    "m",
    "k",
    "gamma",
    "trials",
    "successes",
    "success_rate",
    "reverified",
    *[f"failed_{stage}" for stage in ("generate", *STAGES)],
    "seconds_p50",
    "seconds_p90",
    "seconds_max",
]


class ExperimentCell(BaseModel):
    """One cell of the experiment matrix; spec seeds are filled in per trial."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    host: HostSpec
    h: SubgraphSpec
    params: Parameters = Field(default_factory=Parameters)
    trust_partition: bool = False
    label: Optional[str] = None

    @property
    def title(self) -> str:
        return self.label or f"{self.h.family}-l{self.host.ell}-m{self.host.m}-k{self.host.k}-g{self.host.gamma:g}"


def trial_seeds(root: Optional[int], cells: int, trials: int) -> List[List[Tuple[int, int, int]]]:
    """Independent (host, H, pipeline) seeds for every trial, pre-split from one root."""
    children = np.random.SeedSequence(root).spawn(cells * trials)
    seeds = [tuple(int(s) for s in child.generate_state(3)) for child in children]
    return [seeds[c * trials:(c + 1) * trials] for c in range(cells)]


def run_trial(args: Tuple[int, int, Dict[str, Any], Tuple[int, int, int]]) -> Tuple[int, int, Dict[str, Any]]:
    """Generate one instance and run the pipeline on it; returns the record as a dict."""
    cell_index, trial, cell_data, (host_seed, h_seed, run_seed) = args
    cell = ExperimentCell(**cell_data)
    host_spec = cell.host.model_copy(update={"seed": host_seed})
    h_spec = cell.h.model_copy(update={"seed": h_seed})
    try:
        host, sub, h_spec = build_instance(host_spec, h_spec)
    except WellsepError as e:
        logger.error(f"Cell {cell_index} trial {trial}: instance generation failed: {e}")
        record = ExperimentRecord(
            seed=run_seed,
            params=cell.params.model_dump(),
            host_spec=host_spec.model_dump(),
            h_spec=h_spec.model_dump(),
            trust_partition=cell.trust_partition,
            stages=[StageOutcome("generate", False, 0.0, error=e.to_dict())],
        )
        return cell_index, trial, record.to_dict()
    record = run_pipeline(
        sub.graph,
        host.graph,
        cell.params,
        run_seed,
        planted=host,
        separation=sub.separation,
        trust_partition=cell.trust_partition,
        host_spec=host_spec,
        h_spec=h_spec,
    )
    return cell_index, trial, record.to_dict()


def reverify_archived(path: Union[str, Path]) -> bool:
    """Reload an archived record, regenerate its instance and re-check the embedding."""
    record = ExperimentRecord.from_dict(read_json(path))
    if not record.success or record.embedding is None:
        return False
    host, sub, _ = build_instance(HostSpec(**record.host_spec), SubgraphSpec(**record.h_spec))
    verdict = verify_embedding(sub.graph, host.graph, record.embedding)
    if not verdict:
        logger.warning(f"Archived embedding {path} failed re-verification: {verdict.violation}")
    return verdict.ok


def summarize(
    cells: Sequence[ExperimentCell],
    records: Dict[Tuple[int, int], Dict[str, Any]],
    reverified: Dict[Tuple[int, int], bool],
) -> pd.DataFrame:
    rows = []
    for index, cell in enumerate(cells):
        mine = [(key, r) for key, r in sorted(records.items()) if key[0] == index]
        seconds = np.array([r["seconds"] for _, r in mine]) if mine else np.zeros(0)
        successes = sum(1 for _, r in mine if r["success"])
        row: Dict[str, Any] = {
            "cell": index,
            "label": cell.title,
            "family": cell.h.family,
            "ell": cell.host.ell,
            "m": cell.host.m,
            "k": cell.host.k,
            "gamma": cell.host.gamma,
            "trials": len(mine),
            "successes": successes,
            "success_rate": successes / len(mine) if mine else 0.0,
            "reverified": sum(1 for key, _ in mine if reverified.get(key)),
        }
        for stage in ("generate", *STAGES):
            row[f"failed_{stage}"] = sum(1 for _, r in mine if r["failed_stage"] == stage)
        row["seconds_p50"] = float(np.percentile(seconds, 50)) if seconds.size else 0.0
        row["seconds_p90"] = float(np.percentile(seconds, 90)) if seconds.size else 0.0
        row["seconds_max"] = float(seconds.max()) if seconds.size else 0.0
        rows.append(row)
    return pd.DataFrame(rows, columns=SUMMARY_COLUMNS)


def run_experiment(
    cells: Sequence[ExperimentCell],
    trials: int,
    seed: Optional[int] = None,
    output_dir: Optional[Union[str, Path]] = None,
    workers: Optional[int] = None,
) -> pd.DataFrame:
    """Run ``trials`` seeded trials per cell and write the summary and the record archive.

    ``output_dir`` receives summary.csv, summary.json and records/cell<i>_trial<t>.json.
    ``workers`` > 1 runs trials in a process pool; the parent process writes every file.
    """
    if trials < 0:
        raise ArgumentError(f"trials must be non-negative, got {trials}")
    out = Path(output_dir) if output_dir is not None else settings.OUTPUT_DIR
    out.mkdir(parents=True, exist_ok=True)
    seeds = trial_seeds(seed, len(cells), trials)
    jobs = [
        (c, t, cell.model_dump(), seeds[c][t])
        for c, cell in enumerate(cells)
        for t in range(trials)
    ]
    logger.info(f"Experiment: {len(cells)} cells x {trials} trials, root seed {seed}, output {out}")

    records: Dict[Tuple[int, int], Dict[str, Any]] = {}
    if workers and workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as executor:
            futures = {executor.submit(run_trial, job): job[:2] for job in jobs}
            for future in as_completed(futures):
                c, t, record = future.result()
                records[(c, t)] = record
    else:
        for job in jobs:
            c, t, record = run_trial(job)
            records[(c, t)] = record

    reverified: Dict[Tuple[int, int], bool] = {}
    for (c, t), record in sorted(records.items()):
        path = write_json(record, out / "records" / f"cell{c}_trial{t}.json")
        if record["success"]:
            reverified[(c, t)] = reverify_archived(path)

    summary = summarize(cells, records, reverified)
    csv_path = out / "summary.csv"
    temp_file = csv_path.with_suffix(".csv.tmp")
    summary.to_csv(temp_file, index=False)
    temp_file.replace(csv_path)
    write_json(summary.to_dict(orient="records"), out / "summary.json")
    logger.info(f"Experiment done: {sum(r['success'] for r in records.values())}/{len(records)} successful runs")
    return summary
