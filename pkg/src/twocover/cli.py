"""Command-line driver: generate, descent, batch, smallfields, pointsearch."""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import random
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass
from pathlib import Path

from .bundle import dumps_bundle, load_bundle
from .descent import (
    DEFAULT_FILTER_BOUND,
    UNDETERMINED,
    DescentConfig,
    contact_point_list,
    point_search,
    two_cover_descent,
)
from .errors import TwoCoverError
from .local import MAX_PADIC_PRECISION, ImageCache, LocalConfig
from .moduli import PointConfiguration, build_quartic, general_position, small_field_report

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_UNDETERMINED = 2

DEFAULT_HEIGHT = 10**4
CSV_SCHEMA_VERSION = 1
CSV_COLUMNS = [
    "schema_version", "seed", "index", "moduli", "category", "conclusion",
    "jac_selmer_dim", "jac_selmer_exact", "dim_W", "survivors", "points",
    "obstruction_places", "error",
]
CATEGORIES = ("local_obstruction", "selmer_empty", "contact_point", "other_point", "undetermined", "error")

log = logging.getLogger("twocover")


@dataclass(frozen=True)
class ExperimentConfig:
    coord_range: int
    samples: int
    seed: int
    filter_bound: int = DEFAULT_FILTER_BOUND
    precision_cap: int = MAX_PADIC_PRECISION
    height: int = DEFAULT_HEIGHT
    threads: int = 1
    out_dir: str = "batch-out"

    def __post_init__(self):
        for name in ("coord_range", "samples", "filter_bound", "precision_cap", "threads"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.height < 0:
            raise ValueError("height must be non-negative")


def parse_moduli(text: str) -> PointConfiguration:
    parts = [p.strip() for p in text.split(",")]
    if len(parts) != 6:
        raise argparse.ArgumentTypeError("expected six integers u1,v1,u2,v2,u3,v3")
    try:
        return PointConfiguration.from_flat([int(p) for p in parts])
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc


def descent_config(filter_bound: int, height: int, precision_cap: int = MAX_PADIC_PRECISION) -> DescentConfig:
    local = LocalConfig(cache=ImageCache.from_env(), precision_cap=precision_cap)
    return DescentConfig(filter_bound=filter_bound, search_height=height, local=local)


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


# ---------------------------------------------------------------------------
# batch


def sample_configurations(coord_range: int, samples: int, seed: int) -> list[PointConfiguration]:
    """Seeded uniform draws from [-R, R]^6, keeping those in general position."""
    rng = random.Random(seed)
    out = []
    while len(out) < samples:
        cfg = PointConfiguration.from_flat([rng.randint(-coord_range, coord_range) for _ in range(6)])
        if general_position(cfg):
            out.append(cfg)
    return out


def categorize(report, has_contact_point: bool) -> str:
    """First matching category in the order local obstruction, Selmer-empty, contact point, other point."""
    if report.local_obstructions:
        return "local_obstruction"
    if report.survivors == []:
        return "selmer_empty"
    if report.points:
        return "contact_point" if has_contact_point else "other_point"
    return "undetermined"


def run_one(cfg: PointConfiguration, config: ExperimentConfig) -> dict:
    moduli = [list(pt) for pt in cfg.moduli]
    try:
        curve = build_quartic(cfg)
        report = two_cover_descent(curve, descent_config(config.filter_bound, config.height, config.precision_cap))
        category = categorize(report, bool(contact_point_list(curve)))
        return {"moduli": moduli, "category": category, "report": report.to_json(), "error": None}
    except (TwoCoverError, ArithmeticError, ValueError) as exc:
        return {"moduli": moduli, "category": "error", "report": None, "error": f"{type(exc).__name__}: {exc}"}


def _row(result: dict, index: int, seed: int) -> dict:
    rep = result["report"] or {}
    jac = rep.get("jacSelmer", {})
    return {
        "schema_version": CSV_SCHEMA_VERSION,
        "seed": seed,
        "index": index,
        "moduli": " ".join(str(c) for pt in result["moduli"] for c in pt),
        "category": result["category"],
        "conclusion": rep.get("conclusion", ""),
        "jac_selmer_dim": jac.get("dim", ""),
        "jac_selmer_exact": jac.get("exact", ""),
        "dim_W": rep.get("dimW", ""),
        "survivors": "" if rep.get("survivors") is None else rep["survivors"],
        "points": len(rep.get("points", [])),
        "obstruction_places": " ".join(rep.get("localObstructions", [])),
        "error": result["error"] or "",
    }


def run_batch(config: ExperimentConfig) -> tuple[list[dict], str]:
    """Returns the per-curve results in sample order and the CSV text.

    Existing per-curve JSON files with matching moduli are reused, so an
    interrupted batch resumes where it stopped.
    """
    out = Path(config.out_dir)
    curves_dir = out / "curves"
    curves_dir.mkdir(parents=True, exist_ok=True)
    configs = sample_configurations(config.coord_range, config.samples, config.seed)
    results: list[dict | None] = [None] * len(configs)
    todo = []
    for i, cfg in enumerate(configs):
        path = curves_dir / f"curve-{i:05d}.json"
        if path.exists():
            try:
                old = json.loads(path.read_text())
                if old.get("moduli") == [list(pt) for pt in cfg.moduli] and old.get("seed") == config.seed:
                    results[i] = old
                    continue
            except json.JSONDecodeError:
                pass
        todo.append(i)

    def store(i: int, res: dict) -> None:
        res = {"schemaVersion": CSV_SCHEMA_VERSION, "seed": config.seed, "index": i, **res}
        (curves_dir / f"curve-{i:05d}.json").write_text(json.dumps(res, sort_keys=True, indent=1) + "\n")
        results[i] = res

    if config.threads > 1 and len(todo) > 1:
        with ProcessPoolExecutor(max_workers=config.threads) as pool:
            futures = {i: pool.submit(run_one, configs[i], config) for i in todo}
            for i in todo:
                store(i, futures[i].result())
    else:
        for i in todo:
            store(i, run_one(configs[i], config))

    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=CSV_COLUMNS, lineterminator="\n")
    writer.writeheader()
    for i, res in enumerate(results):
        writer.writerow(_row(res, i, config.seed))
    text = buf.getvalue()
    (out / "summary.csv").write_text(text)
    (out / "config.json").write_text(json.dumps(asdict(config), sort_keys=True, indent=1) + "\n")
    return results, text


def category_counts(results: list[dict]) -> dict[str, int]:
    counts = {c: 0 for c in CATEGORIES}
    for res in results:
        counts[res["category"]] += 1
    return counts


# ---------------------------------------------------------------------------
# commands


def cmd_generate(args) -> int:
    curve = build_quartic(args.moduli)
    _emit(dumps_bundle(curve), args.out)
    return EXIT_OK


def cmd_descent(args) -> int:
    curve = load_bundle(args.bundle)
    report = two_cover_descent(curve, descent_config(args.filter_bound, args.height, args.precision_cap))
    _emit(json.dumps(report.to_json(), sort_keys=True, indent=1) + "\n", args.out)
    return EXIT_UNDETERMINED if report.conclusion == UNDETERMINED else EXIT_OK


def cmd_batch(args) -> int:
    config = ExperimentConfig(
        coord_range=args.range, samples=args.samples, seed=args.seed, filter_bound=args.filter_bound,
        precision_cap=args.precision_cap, height=args.height, threads=args.threads, out_dir=args.out,
    )
    results, _ = run_batch(config)
    counts = category_counts(results)
    sys.stdout.write(json.dumps({"seed": config.seed, "samples": config.samples, "categories": counts},
                                sort_keys=True) + "\n")
    return EXIT_OK


def cmd_smallfields(args) -> int:
    _emit(json.dumps(small_field_report(args.q), sort_keys=True) + "\n", args.out)
    return EXIT_OK


def cmd_pointsearch(args) -> int:
    curve = load_bundle(args.bundle)
    pts = point_search(curve, args.height)
    _emit(json.dumps({"height": args.height, "points": [list(P) for P in pts]}) + "\n", args.out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="twocover", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="build a labelled quartic bundle from three moduli points")
    g.add_argument("--moduli", type=parse_moduli, required=True,
                   help="u1,v1,u2,v2,u3,v3 (write --moduli=... when the first value is negative)")
    g.add_argument("--out", help="output file (default stdout)")
    g.set_defaults(func=cmd_generate)

    d = sub.add_parser("descent", help="run two-cover descent on a bundle")
    d.add_argument("--bundle", required=True)
    d.add_argument("--filter-bound", type=int, default=DEFAULT_FILTER_BOUND)
    d.add_argument("--height", type=int, default=DEFAULT_HEIGHT)
    d.add_argument("--precision-cap", type=int, default=MAX_PADIC_PRECISION)
    d.add_argument("--out")
    d.set_defaults(func=cmd_descent)

    b = sub.add_parser("batch", help="descent over seeded random configurations")
    b.add_argument("--range", type=int, required=True, help="coordinates drawn from [-R, R]")
    b.add_argument("--samples", type=int, required=True)
    b.add_argument("--seed", type=int, required=True)
    b.add_argument("--threads", type=int, default=1)
    b.add_argument("--filter-bound", type=int, default=DEFAULT_FILTER_BOUND)
    b.add_argument("--height", type=int, default=DEFAULT_HEIGHT)
    b.add_argument("--precision-cap", type=int, default=MAX_PADIC_PRECISION)
    b.add_argument("--out", default="batch-out", help="output directory")
    b.set_defaults(func=cmd_batch)

    s = sub.add_parser("smallfields", help="general-position completions over F_q")
    s.add_argument("--q", type=int, required=True, choices=(3, 5, 7, 9, 11))
    s.add_argument("--out")
    s.set_defaults(func=cmd_smallfields)

    p = sub.add_parser("pointsearch", help="rational points up to a height bound")
    p.add_argument("--bundle", required=True)
    p.add_argument("--height", type=int, default=DEFAULT_HEIGHT)
    p.add_argument("--out")
    p.set_defaults(func=cmd_pointsearch)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (TwoCoverError, ValueError, OSError) as exc:
        sys.stderr.write(f"error: {type(exc).__name__}: {exc}\n")
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
