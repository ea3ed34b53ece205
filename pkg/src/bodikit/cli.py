"""Command-line entry point: runs, sweeps, diagnostics, theory checks.

Subcommands: run, diagnose, theory-check, dict-stats.  All output is
deterministic given (argv, config, seed) apart from timestamps, which live
only in JSON documents.  Set BODI_KIT_LOG (DEBUG/INFO/WARNING/ERROR) to
control logging.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import statistics
import sys
from concurrent.futures import ProcessPoolExecutor
from importlib import resources

import numpy as np

try:
    import jsonschema
except ImportError:  # pragma: no cover
    jsonschema = None

from .benchmarks import MeritConvention, make_problem, random_search
from .combinatorics.dictionaries import (
    Dictionary,
    build_diverse_random_binary,
    embed,
    embed_affine,
    sequency,
)
from .combinatorics.spaces import SearchSpace
from .combinatorics.theory import (
    cardinality_bound,
    coherence_mu,
    enumerate_embedded_cardinality,
    gaussian_projection_cardinality,
)
from .engine import (
    BoConfig,
    DICTIONARY_AUTO,
    build_dictionary,
    model_diagnostics,
    resolve_dictionary_kind,
    run_bodi,
    subseed,
)
from .exceptions import (
    BodikitError,
    ConfigError,
    ProblemFileNotFoundError,
    UnsupportedSpaceError,
)

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_CONFIG = 2
EXIT_MISSING_FILE = 3

CONFIG_SCHEMA_NAME = "experiment_config_v1.schema.json"

logger = logging.getLogger("bodikit.cli")


def load_config_schema() -> dict:
    text = resources.files("bodikit.schemas").joinpath(CONFIG_SCHEMA_NAME).read_text()
    return json.loads(text)


def validate_config(doc: dict) -> dict:
    """Schema-validate a config document and apply defaults.

    Raises ConfigError (exit code 2) with a dotted field path on the first
    violation; also enforces cross-field preconditions the schema cannot
    express (budget >= n_init).
    """
    if jsonschema is None:  # pragma: no cover
        raise ConfigError("jsonschema is required to validate configs")
    schema = load_config_schema()
    validator = jsonschema.Draft7Validator(schema)
    errors = list(validator.iter_errors(doc))
    if errors:
        best = jsonschema.exceptions.best_match(errors)
        path = ".".join(str(p) for p in best.absolute_path)
        raise ConfigError(best.message, path=path)

    cfg = {
        "schema_version": 1,
        "method": "bodi",
        "n_init": 10,
        "m": 128,
        "dictionary": DICTIONARY_AUTO,
        "acquisition": "ei",
        "delta": 0.1,
        "seeds": [0],
        "merit_convention": "conventional",
        "maxsat_exclude_top": False,
        "local_search": {},
        "fit_restarts": 8,
        "fit_maxiter": 100,
        "out_dir": "runs",
    }
    cfg.update(doc)
    if cfg["budget"] < cfg["n_init"]:
        raise ConfigError(
            f"budget ({cfg['budget']}) must be >= n_init ({cfg['n_init']})",
            path="budget",
        )
    return cfg


def _as_list(value) -> list:
    return value if isinstance(value, list) else [value]


def _problem_slug(problem: str) -> str:
    if problem.startswith("maxsat:"):
        base = os.path.basename(problem.split(":", 1)[1])
        stem = os.path.splitext(base)[0]
        return f"maxsat-{stem}"
    return "".join(ch if (ch.isalnum() or ch == "-") else "-" for ch in problem)


def _build_tasks(cfg: dict, out_dir: str, fmt: str) -> list[dict]:
    tasks = []
    if cfg["method"] == "random":
        axes = [(None, None)]
    else:
        axes = [(m, kind) for m in _as_list(cfg["m"]) for kind in _as_list(cfg["dictionary"])]
    slug = _problem_slug(cfg["problem"])
    multi_axis = len(axes) > 1
    for m, kind in axes:
        for seed in cfg["seeds"]:
            if cfg["method"] == "random":
                base = f"{slug}__random__seed{seed}"
            else:
                kind_tag = f"_{kind}" if (multi_axis or kind != DICTIONARY_AUTO) else ""
                base = f"{slug}__bodi{kind_tag}_m{m}__seed{seed}"
            tasks.append({
                "problem": cfg["problem"],
                "method": cfg["method"],
                "budget": cfg["budget"],
                "n_init": cfg["n_init"],
                "m": m,
                "dictionary": kind,
                "acquisition": cfg["acquisition"],
                "delta": cfg["delta"],
                "seed": seed,
                "merit_convention": cfg["merit_convention"],
                "maxsat_exclude_top": cfg["maxsat_exclude_top"],
                "local_search": cfg["local_search"],
                "fit_restarts": cfg["fit_restarts"],
                "fit_maxiter": cfg["fit_maxiter"],
                "out_dir": out_dir,
                "format": fmt,
                "base_name": base,
            })
    return tasks


def _local_search_config(doc: dict):
    from .acquisition import LocalSearchConfig

    defaults = LocalSearchConfig()
    return LocalSearchConfig(
        num_restarts=doc.get("num_restarts", defaults.num_restarts),
        num_random_candidates=doc.get("num_random_candidates", defaults.num_random_candidates),
        num_spray_neighbors=doc.get("num_spray_neighbors", defaults.num_spray_neighbors),
        max_iters=doc.get("max_iters", defaults.max_iters),
        max_alternating_rounds=doc.get("max_alternating_rounds", defaults.max_alternating_rounds),
    )


def _execute_task(task: dict) -> dict:
    """Run one (config, seed) cell and write its artifacts.

    Module-level so worker processes can import it; workers rebuild the
    problem from its spec string rather than unpickling closures.
    """
    problem = make_problem(
        task["problem"],
        merit_convention=MeritConvention(task["merit_convention"]),
        maxsat_exclude_top=task["maxsat_exclude_top"],
    )
    if task["method"] == "random":
        record = random_search(problem, task["budget"], task["seed"])
    else:
        config = BoConfig(
            budget=task["budget"],
            m=task["m"],
            dictionary_kind=task["dictionary"],
            n_init=task["n_init"],
            acquisition=task["acquisition"],
            local_search=_local_search_config(task["local_search"]),
            seed=task["seed"],
            delta=task["delta"],
            fit_restarts=task["fit_restarts"],
            fit_maxiter=task["fit_maxiter"],
        )
        record = run_bodi(problem, config)

    base = os.path.join(task["out_dir"], task["base_name"])
    document = record.to_json_document()
    document["config"]["problem"] = task["problem"]
    document["config"]["merit_convention"] = task["merit_convention"]
    written = []
    if task["format"] == "csv":
        csv_path = base + ".csv"
        with open(csv_path, "w", encoding="utf-8") as fh:
            fh.write(record.to_csv())
        written.append(csv_path)
    json_path = base + ".json"
    with open(json_path, "w", encoding="utf-8") as fh:
        json.dump(document, fh, indent=2)
        fh.write("\n")
    written.append(json_path)
    return {
        "name": task["base_name"],
        "best_value": record.best_value,
        "best_objective": record.best_objective(),
        "files": written,
        "events": len(record.events),
    }


def cmd_run(args) -> int:
    try:
        with open(args.config, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except FileNotFoundError:
        print(f"error: config file not found: {args.config}", file=sys.stderr)
        return EXIT_CONFIG
    except json.JSONDecodeError as exc:
        print(f"error: config is not valid JSON: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    cfg = validate_config(doc)

    out_dir = args.out_dir or cfg["out_dir"]
    if args.seed is not None:
        cfg["seeds"] = [args.seed]

    # pre-flight: every module precondition checkable from the config fails
    # here, before any model fitting starts
    problem = make_problem(
        cfg["problem"],
        merit_convention=MeritConvention(cfg["merit_convention"]),
        maxsat_exclude_top=cfg["maxsat_exclude_top"],
    )
    if cfg["method"] == "bodi":
        for kind in _as_list(cfg["dictionary"]):
            try:
                resolve_dictionary_kind(kind, problem.space)
            except UnsupportedSpaceError as exc:
                raise ConfigError(str(exc), path="dictionary")
        _local_search_config(cfg["local_search"])

    os.makedirs(out_dir, exist_ok=True)
    tasks = _build_tasks(cfg, out_dir, args.format)
    failures = 0
    results = []
    if args.workers > 1:
        with ProcessPoolExecutor(max_workers=args.workers) as pool:
            for result in pool.map(_execute_task, tasks):
                results.append(result)
    else:
        for task in tasks:
            results.append(_execute_task(task))
    for result in results:
        print(
            f"{result['name']}: best_objective={result['best_objective']:.6g}"
            + (f" events={result['events']}" if result["events"] else "")
        )
    print(f"wrote {sum(len(r['files']) for r in results)} files to {out_dir}")
    return EXIT_FAILURE if failures else EXIT_OK


def _parse_int_list(text: str, flag: str) -> list[int]:
    try:
        return [int(tok) for tok in text.split(",") if tok.strip() != ""]
    except ValueError:
        raise ConfigError(f"expected comma-separated integers, got {text!r}", path=flag)


def cmd_diagnose(args) -> int:
    if args.n_train < 2:
        raise ConfigError("n-train must be >= 2", path="n-train")
    if args.n_test < 1:
        raise ConfigError("n-test must be >= 1", path="n-test")
    seeds = [args.seed] if args.seed is not None else _parse_int_list(args.seeds, "seeds")
    kinds = [k.strip() for k in args.kind.split(",") if k.strip()]
    problem = make_problem(args.problem)
    out_dir = args.out_dir or "runs"
    os.makedirs(out_dir, exist_ok=True)

    summary_rows = []
    for kind in kinds:
        resolve_dictionary_kind(kind, problem.space)
        reports = []
        for seed in seeds:
            report = model_diagnostics(
                problem, args.n_train, args.n_test, kind, args.m, seed
            )
            reports.append(report)
            path = os.path.join(
                out_dir,
                f"diagnose_{_problem_slug(args.problem)}_{kind}_m{args.m}_seed{seed}.json",
            )
            with open(path, "w", encoding="utf-8") as fh:
                json.dump(report.to_json(), fh, indent=2)
                fh.write("\n")
        summary_rows.append({
            "dictionary": kind,
            "m": args.m,
            "seeds": len(seeds),
            "median_rmse_standardized": statistics.median(
                r.rmse_standardized for r in reports
            ),
            "median_rmse": statistics.median(r.rmse for r in reports),
            "median_nlpd": statistics.median(r.nlpd for r in reports),
            "median_coverage95": statistics.median(r.coverage95 for r in reports),
        })

    header = f"{'dictionary':<28}{'m':>6}{'rmse_std':>12}{'rmse':>12}{'nlpd':>10}{'cover95':>10}"
    print(header)
    for row in summary_rows:
        print(
            f"{row['dictionary']:<28}{row['m']:>6}"
            f"{row['median_rmse_standardized']:>12.4f}{row['median_rmse']:>12.4f}"
            f"{row['median_nlpd']:>10.3f}{row['median_coverage95']:>10.3f}"
        )
    aggregate_path = os.path.join(out_dir, "diagnose_summary.json")
    with open(aggregate_path, "w", encoding="utf-8") as fh:
        json.dump({"problem": args.problem, "rows": summary_rows}, fh, indent=2)
        fh.write("\n")
    print(f"wrote {aggregate_path}")
    return EXIT_OK


def cmd_theory_check(args) -> int:
    if not (1 <= args.d_min <= args.d_max <= 24):
        raise ConfigError("need 1 <= d-min <= d-max <= 24", path="d-max")
    if not (1 <= args.m_min <= args.m_max):
        raise ConfigError("need 1 <= m-min <= m-max", path="m-min")
    if args.trials < 0:
        raise ConfigError("trials must be >= 0", path="trials")
    if args.trials == 0:
        print("warning: 0 trials requested; all properties pass vacuously")
        print(f"{'property':<24}{'trials':>8}{'violations':>12}  status")
        for name in ("affine-identity", "cardinality-bound", "gaussian-projection"):
            print(f"{name:<24}{0:>8}{0:>12}  PASS")
        return EXIT_OK
    seed = args.seed if args.seed is not None else 0

    rng = np.random.default_rng(subseed(seed, 1))
    affine_bad = 0
    for _ in range(args.trials):
        d = int(rng.integers(args.d_min, args.d_max + 1))
        m = int(rng.integers(args.m_min, args.m_max + 1))
        dictionary = Dictionary.explicit(rng.integers(0, 2, size=(m, d)))
        z = rng.integers(0, 2, size=d)
        if not np.array_equal(embed(dictionary, z), embed_affine(dictionary, z)):
            affine_bad += 1

    # enumeration is exponential in d; keep the sampled range tractable while
    # honoring the requested window
    rng = np.random.default_rng(subseed(seed, 2))
    bound_d_max = min(args.d_max, 14)
    bound_bad = 0
    builders = ("explicit", "diverse", "wavelet")
    for trial in range(args.trials):
        d = int(rng.integers(args.d_min, bound_d_max + 1))
        m = int(rng.integers(args.m_min, args.m_max + 1))
        builder = builders[trial % len(builders)]
        if builder == "diverse":
            dictionary = build_diverse_random_binary(d, m, int(rng.integers(0, 2 ** 31)))
        elif builder == "wavelet":
            dictionary = build_dictionary(
                "binary-wavelet", SearchSpace.binary(d), m, int(rng.integers(0, 2 ** 31))
            )
        else:
            dictionary = Dictionary.explicit(rng.integers(0, 2, size=(m, d)))
        if enumerate_embedded_cardinality(dictionary) > cardinality_bound(dictionary):
            bound_bad += 1

    rng = np.random.default_rng(subseed(seed, 3))
    gauss_d_max = min(args.d_max, 20)
    gauss_bad = 0
    for _ in range(args.trials):
        d = int(rng.integers(args.d_min, gauss_d_max + 1))
        if gaussian_projection_cardinality(d, int(rng.integers(0, 2 ** 31))) != 2 ** d:
            gauss_bad += 1

    rows = [
        ("affine-identity", args.trials, affine_bad),
        ("cardinality-bound", args.trials, bound_bad),
        ("gaussian-projection", args.trials, gauss_bad),
    ]
    print(f"{'property':<24}{'trials':>8}{'violations':>12}  status")
    for name, trials, bad in rows:
        print(f"{name:<24}{trials:>8}{bad:>12}  {'PASS' if bad == 0 else 'FAIL'}")
    return EXIT_OK if all(bad == 0 for _, _, bad in rows) else EXIT_FAILURE


def cmd_dict_stats(args) -> int:
    seed = args.seed if args.seed is not None else 0
    if args.dict_file is not None:
        if not os.path.exists(args.dict_file):
            raise ProblemFileNotFoundError(f"dictionary file not found: {args.dict_file}")
        with open(args.dict_file, "r", encoding="utf-8") as fh:
            dictionary = Dictionary.from_json(json.load(fh))
    else:
        if args.kind is None or args.d is None or args.m is None:
            raise ConfigError("need --kind, --d and --m (or --dict-file)", path="kind")
        if args.cardinalities is not None:
            taus = _parse_int_list(args.cardinalities, "cardinalities")
            if len(taus) != args.d:
                raise ConfigError(
                    f"{len(taus)} cardinalities for d={args.d}", path="cardinalities"
                )
            space = SearchSpace(cardinalities=tuple(taus))
        else:
            space = SearchSpace.binary(args.d)
        dictionary = build_dictionary(args.kind, space, args.m, seed)

    print(f"kind: {dictionary.kind.value}")
    print(f"m x d: {dictionary.m} x {dictionary.d}")
    print(f"seed: {dictionary.seed}")
    if dictionary.is_binary and dictionary.m >= 2:
        mu = coherence_mu(dictionary)
        print(f"coherence mu: {mu} (bounds: ceil(d/2)={-(-dictionary.d // 2)}, d={dictionary.d})")
    else:
        print("coherence mu: n/a")
    if dictionary.is_binary:
        print(f"cardinality bound: {cardinality_bound(dictionary)}")
    else:
        print("cardinality bound: n/a (binary only)")

    sums = dictionary.rows.sum(axis=1)
    print("row-sum histogram:")
    uniq, counts = np.unique(sums, return_counts=True)
    for value, count in zip(uniq, counts):
        print(f"  {int(value):>4}: {int(count)}")
    if dictionary.is_binary:
        seqs = np.array([sequency(row) for row in dictionary.rows])
        print("sequency histogram:")
        uniq, counts = np.unique(seqs, return_counts=True)
        for value, count in zip(uniq, counts):
            print(f"  {int(value):>4}: {int(count)}")
    else:
        print("sequency histogram: n/a (binary only)")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None,
                        help="override the seed (run: replaces the config's seed list)")
    common.add_argument("--out-dir", default=None, help="output directory")
    common.add_argument("--workers", type=int, default=1,
                        help="parallel worker processes for seed sweeps")
    common.add_argument("--format", choices=("csv", "json"), default="csv",
                        help="csv: trace CSV + JSON sidecar; json: JSON only")

    parser = argparse.ArgumentParser(
        prog="bodikit",
        description="Bayesian optimization over binary/categorical/mixed spaces "
                    "via dictionary-based Hamming embeddings",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", parents=[common],
                           help="execute a config file (sweeps over seeds, m, kinds)")
    p_run.add_argument("config", help="path to a JSON experiment config")
    p_run.set_defaults(func=cmd_run)

    p_diag = sub.add_parser("diagnose", parents=[common],
                            help="surrogate fit diagnostics on a random design split")
    p_diag.add_argument("--problem", required=True)
    p_diag.add_argument("--n-train", type=int, default=50)
    p_diag.add_argument("--n-test", type=int, default=50)
    p_diag.add_argument("--kind", default=DICTIONARY_AUTO,
                        help="dictionary kind(s), comma separated")
    p_diag.add_argument("--m", type=int, default=128)
    p_diag.add_argument("--seeds", default="0", help="comma-separated seed list")
    p_diag.set_defaults(func=cmd_diagnose)

    p_theory = sub.add_parser("theory-check", parents=[common],
                              help="property checks: affine identity, cardinality "
                                   "bound, Gaussian projection")
    p_theory.add_argument("--d-min", type=int, default=1)
    p_theory.add_argument("--d-max", type=int, default=10,
                          help="<= 24; enumeration samples cap d at 14 (bound) / 20 (projection)")
    p_theory.add_argument("--m-min", type=int, default=1)
    p_theory.add_argument("--m-max", type=int, default=4)
    p_theory.add_argument("--trials", type=int, default=100)
    p_theory.set_defaults(func=cmd_theory_check)

    p_stats = sub.add_parser("dict-stats", parents=[common],
                             help="coherence, cardinality bound, row-sum and "
                                  "sequency histograms of a dictionary")
    p_stats.add_argument("--kind", default=None)
    p_stats.add_argument("--d", type=int, default=None)
    p_stats.add_argument("--m", type=int, default=None)
    p_stats.add_argument("--cardinalities", default=None,
                         help="comma-separated category counts (categorical spaces)")
    p_stats.add_argument("--dict-file", default=None,
                         help="load a serialized dictionary instead of building one")
    p_stats.set_defaults(func=cmd_dict_stats)
    return parser


def main(argv=None) -> int:
    level_name = os.environ.get("BODI_KIT_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level_name, logging.WARNING))
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ProblemFileNotFoundError, FileNotFoundError) as exc:
        print(f"missing file: {exc}", file=sys.stderr)
        return EXIT_MISSING_FILE
    except BodikitError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
