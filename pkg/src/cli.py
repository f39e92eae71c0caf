"""`wellsep` command line."""
import argparse
import logging
import sys
from pathlib import Path
from typing import Any, Dict, Optional, Sequence, Type, TypeVar

import orjson
from pydantic import BaseModel, ValidationError

from config import settings
from src.assignment import Parameters, solve_assignment_lp
from src.embedding import verify_embedding
from src.errors import ArgumentError, WellsepError
from src.factor import find_kfactor
from src.graph import read_edge_list, write_edge_list
from src.harness import (
    ExperimentCell,
    HostSpec,
    PlantedHost,
    SubgraphSpec,
    generate_H,
    generate_host,
    run_experiment,
    run_pipeline,
)
from src.regularity import degree_form_prune, reduced_graph, singleton_partition
from src.separability import Separation
from src.utils import dumps, read_json, write_json

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_STAGE_FAILURE = 1
EXIT_ARGUMENT_ERROR = 2

Model = TypeVar("Model", bound=BaseModel)


def setup_logging(level: Optional[str] = None) -> None:
    settings.ensure_dirs()
    logging.basicConfig(
        level=level or ("DEBUG" if settings.DEBUG else settings.LOG_LEVEL),
        format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
        handlers=[
            logging.StreamHandler(),
            logging.FileHandler(settings.LOGS_DIR / f"{settings.APP_NAME}.log"),
        ],
    )


def load_params(value: Optional[str], model: Type[Model], **overrides: Any) -> Model:
    """Validate ``--params``: inline JSON or a path to a JSON file."""
    data: Dict[str, Any] = {}
    if value:
        text = value.strip()
        if text.startswith("{"):
            data = orjson.loads(text)
        else:
            data = read_json(text)
    data.update({key: v for key, v in overrides.items() if v is not None})
    return model(**data)


def emit(data: Any, out: Optional[str]) -> None:
    if out:
        path = write_json(data, out)
        logger.info(f"Wrote {path}")
    else:
        sys.stdout.write(dumps(data).decode("utf-8") + "\n")


def cmd_decompose(args: argparse.Namespace) -> int:
    params = load_params(args.params, Parameters)
    g = read_edge_list(args.host)
    if args.clusters:
        layout = read_json(args.clusters)
        part = degree_form_prune(g, layout["clusters"], params.d, params.eps, V0=layout.get("V0", []), rng=args.seed)
    else:
        part = singleton_partition(g, params.d, params.eps)
    reduced = reduced_graph(part, params.d, params.edge_rule, args.seed)
    emit({"partition": part.to_dict(), "reduced_graph": reduced.to_dict()}, args.out)
    return EXIT_OK


def cmd_factor(args: argparse.Namespace) -> int:
    gr = read_edge_list(args.graph)
    factor = find_kfactor(gr, args.k)
    if factor is None:
        logger.error(f"No K_{args.k}-factor found in {gr!r}")
        emit({"factor": None}, args.out)
        return EXIT_STAGE_FAILURE
    emit({"factor": factor.to_dict()}, args.out)
    return EXIT_OK


def cmd_lp(args: argparse.Namespace) -> int:
    result = solve_assignment_lp(args.k, args.gamma2)
    emit(result.to_dict(), args.out)
    return EXIT_OK if result.feasible else EXIT_STAGE_FAILURE


def _witness(path: str, n: int) -> Separation:
    """Separation from a gen-h sidecar or a bare {"S", "components"} file."""
    data = read_json(path)
    if isinstance(data, dict) and "separation" in data:
        data = data["separation"]
    if not isinstance(data, dict):
        raise ArgumentError(f"{path} holds no separation")
    return Separation.from_dict(data, n)


def _pipeline(args: argparse.Namespace, stop_after: Optional[str]) -> int:
    params = load_params(args.params, Parameters)
    h = read_edge_list(args.h)
    g = read_edge_list(args.host)
    planted = PlantedHost.from_dict(read_json(args.planted), g) if args.planted else None
    separation = _witness(args.witness, h.n) if args.witness else None
    if args.trust and planted is None:
        raise ArgumentError("--trust needs the planted structure from --planted")
    record = run_pipeline(
        h,
        g,
        params,
        args.seed,
        planted=planted,
        separation=separation,
        trust_partition=args.trust,
        stop_after=stop_after,
    )
    emit(record.to_dict(), args.out)
    if not record.success:
        logger.error(f"Pipeline failed at stage {record.failed_stage}")
        return EXIT_STAGE_FAILURE
    return EXIT_OK


def cmd_assign(args: argparse.Namespace) -> int:
    return _pipeline(args, "balance")


def cmd_embed(args: argparse.Namespace) -> int:
    return _pipeline(args, None)


def cmd_verify(args: argparse.Namespace) -> int:
    h = read_edge_list(args.h)
    g = read_edge_list(args.host)
    data = read_json(args.phi)
    phi = data["embedding"] if isinstance(data, dict) and "embedding" in data else data
    if isinstance(phi, dict):
        phi = phi["phi"]
    if phi is None:
        raise ArgumentError(f"{args.phi} holds no embedding")
    verdict = verify_embedding(h, g, [int(v) for v in phi])
    emit(verdict.to_dict(), args.out)
    return EXIT_OK if verdict else EXIT_STAGE_FAILURE


def cmd_gen_host(args: argparse.Namespace) -> int:
    spec = load_params(args.params, HostSpec, seed=args.seed)
    host = generate_host(spec)
    out = Path(args.out) if args.out else settings.OUTPUT_DIR / "host.txt"
    write_edge_list(host.graph, out)
    sidecar = write_json(
        {
            "spec": spec.model_dump(),
            "planted": host.to_dict(),
            "partition": host.partition.to_dict(),
        },
        out.with_suffix(".json"),
    )
    logger.info(f"Wrote host {host.graph!r} to {out} and its planted structure to {sidecar}")
    return EXIT_OK


def cmd_gen_h(args: argparse.Namespace) -> int:
    spec = load_params(args.params, SubgraphSpec, seed=args.seed)
    sub = generate_H(spec)
    out = Path(args.out) if args.out else settings.OUTPUT_DIR / "h.txt"
    write_edge_list(sub.graph, out)
    sidecar = write_json({"spec": spec.model_dump(), **sub.to_dict()}, out.with_suffix(".json"))
    logger.info(f"Wrote {spec.family} pattern {sub.graph!r} to {out} and its witness to {sidecar}")
    return EXIT_OK


def cmd_experiment(args: argparse.Namespace) -> int:
    matrix = read_json(args.matrix) if args.matrix else []
    if isinstance(matrix, dict):
        matrix = matrix.get("cells", [])
    cells = [ExperimentCell(**cell) for cell in matrix]
    summary = run_experiment(cells, args.trials, args.seed, args.out, args.workers)
    if not summary.empty:
        logger.info("\n" + summary[["label", "trials", "successes", "success_rate"]].to_string(index=False))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help="seed for every random choice")
    common.add_argument("--params", default=None, help="parameters as inline JSON or a JSON file")
    common.add_argument("--out", default=None, help="output path (stdout when omitted for JSON results)")

    parser = argparse.ArgumentParser(prog="wellsep", description="Embed well-separable graphs into dense hosts.")
    parser.add_argument("--log-level", default=None)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("decompose", parents=[common], help="degree-form partition and reduced graph")
    p.add_argument("--host", required=True, help="host edge list")
    p.add_argument("--clusters", help="JSON with 'clusters' (and optional 'V0') to prune and certify")
    p.set_defaults(handler=cmd_decompose)

    p = sub.add_parser("factor", parents=[common], help="K_k-factor of a reduced graph")
    p.add_argument("--graph", required=True, help="reduced graph edge list")
    p.add_argument("--k", type=int, default=3)
    p.set_defaults(handler=cmd_factor)

    p = sub.add_parser("lp", parents=[common], help="assignment LP with its dual certificate")
    p.add_argument("--k", type=int, default=3)
    p.add_argument("--gamma2", type=float, default=0.0)
    p.set_defaults(handler=cmd_lp)

    for name, handler, text in (
        ("assign", cmd_assign, "run the pipeline through load balancing"),
        ("embed", cmd_embed, "run the whole pipeline"),
    ):
        p = sub.add_parser(name, parents=[common], help=text)
        p.add_argument("--h", required=True, help="pattern edge list")
        p.add_argument("--host", required=True, help="host edge list")
        p.add_argument("--planted", help="gen-host sidecar JSON: use its planted clusters instead of singletons")
        p.add_argument("--witness", help="gen-h sidecar JSON: try its separation before searching")
        p.add_argument("--trust", action="store_true", help="use the planted certificates without re-certifying")
        p.set_defaults(handler=handler)

    p = sub.add_parser("verify", parents=[common], help="check an embedding independently")
    p.add_argument("--h", required=True)
    p.add_argument("--host", required=True)
    p.add_argument("--phi", required=True, help="JSON list, {'phi': [...]} or a pipeline record")
    p.set_defaults(handler=cmd_verify)

    p = sub.add_parser("gen-host", parents=[common], help="generate a planted host")
    p.set_defaults(handler=cmd_gen_host)

    p = sub.add_parser("gen-h", parents=[common], help="generate a separable pattern graph")
    p.set_defaults(handler=cmd_gen_h)

    p = sub.add_parser("experiment", parents=[common], help="seeded trials over a matrix of specs")
    p.add_argument("--matrix", help="JSON list of cells (host, h, params, trust_partition, label)")
    p.add_argument("--trials", type=int, default=1)
    p.add_argument("--workers", type=int, default=None)
    p.set_defaults(handler=cmd_experiment)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_ARGUMENT_ERROR if e.code else EXIT_OK
    setup_logging(args.log_level)
    try:
        return args.handler(args)
    except (ArgumentError, ValidationError, orjson.JSONDecodeError) as e:
        logger.error(f"Invalid arguments: {e}")
        return EXIT_ARGUMENT_ERROR
    except FileNotFoundError as e:
        logger.error(f"Missing input file: {e.filename}")
        return EXIT_ARGUMENT_ERROR
    except WellsepError as e:
        logger.error(f"{args.command} failed: {e}")
        return EXIT_STAGE_FAILURE
    except Exception as e:
        logger.error(f"An error occurred: {e}", exc_info=True)
        return EXIT_STAGE_FAILURE


if __name__ == "__main__":
    sys.exit(main())
