"""Command-line front end.

Subcommands::

    gen     write a synthetic scenario (private/ and analyst/ directories)
    align   run one or all alignment methods on the analyst bundles
    verify  check concordance against the private bases (exit 0 iff satisfied)
    cost    traffic / FLOP / memory report for a CostParams JSON
    bench   timing sweep, CSV plus JSON sidecar
    demo    collusion reconstruction of every secret basis

Exit codes: 0 success, 1 validation failure (including an unsatisfied
``verify``), 2 numerical failure, 3 I/O failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import bench, costmodel
from .alignment import AlignmentResult, Method, align, concordance_report
from .errors import DCError, IoError, NumericalError, ValidationError
from .matio import read_dcm, read_matrix, write_csv, write_dcm
from .protocol import (
    IntermediateBundle,
    ScenarioSpec,
    UserPrivate,
    collude_reconstruct,
    encode_user,
    make_scenario,
)

logger = logging.getLogger(__name__)

EXIT_OK, EXIT_VALIDATION, EXIT_NUMERICAL, EXIT_IO = 0, 1, 2, 3
COMMANDS = ("gen", "align", "verify", "cost", "bench", "demo")


@dataclass
class RunConfig:
    command: str
    scenario: ScenarioSpec | None = None
    methods: list[Method] = field(default_factory=list)
    o_seed: int | None = None
    r_path: str | None = None
    r_seed: int | None = None
    input: str | None = None
    out: str | None = None
    format: str = "json"
    threads: int | None = None
    seed: int | None = None
    raw: dict = field(default_factory=dict)


# -- layout -----------------------------------------------------------------

def user_dir(root: Path, i: int) -> Path:
    return root / f"user_{i:03d}"


def _json_dump(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def _write_matrix(path: Path, m, csv_mirror: bool) -> None:
    write_dcm(path, m)
    if csv_mirror:
        write_csv(path.with_suffix(".csv"), m)


def _prepare_out(out: Path, marker: str) -> None:
    """Create ``out``; an existing non-empty directory is reused only if it holds ``marker``."""
    if out.exists() and not out.is_dir():
        raise IoError(f"output path {out} exists and is not a directory")
    if out.is_dir() and any(out.iterdir()) and not (out / marker).exists():
        raise IoError(f"output directory {out} is not empty and was not produced by this command")
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise IoError(f"cannot create {out}: {exc}") from exc


def _gen_root(path: str | None) -> Path:
    if path is None:
        raise ValidationError("--in is required")
    root = Path(path)
    if not (root / "scenario.json").is_file():
        raise IoError(f"{root} is not a gen output directory (scenario.json missing)")
    return root


def load_scenario(root: Path) -> ScenarioSpec:
    return ScenarioSpec.from_json((root / "scenario.json").read_text())


def load_bundles(root: Path, users: int) -> list[IntermediateBundle]:
    analyst = root / "analyst"
    bundles = []
    for i in range(users):
        d = user_dir(analyst, i)
        try:
            bundles.append(IntermediateBundle(
                x_tilde=read_dcm(d / "x_tilde.dcm"),
                a_i=read_dcm(d / "a_i.dcm"),
                labels=np.asarray(json.loads((d / "labels.json").read_text()), dtype=np.int64),
            ))
        except (IoError, OSError, ValueError) as exc:
            raise ValidationError(f"bundle for user {i} is missing or unreadable: {exc}") from exc
    shapes = {b.a_i.shape for b in bundles}
    widths = {b.x_tilde.shape[1] for b in bundles}
    if len(shapes) != 1 or widths != {next(iter(shapes))[1]}:
        raise ValidationError(f"incompatible bundle shapes: anchors {sorted(shapes)}, widths {sorted(widths)}")
    return bundles


def load_privates(root: Path, users: int) -> list[UserPrivate]:
    private = root / "private"
    out = []
    for i in range(users):
        d = user_dir(private, i)
        try:
            out.append(UserPrivate(
                x=read_dcm(d / "x.dcm"),
                labels=np.asarray(json.loads((d / "labels.json").read_text()), dtype=np.int64),
                f=read_dcm(d / "f.dcm"),
                e=read_dcm(d / "e.dcm"),
            ))
        except (OSError, ValueError) as exc:
            raise IoError(f"private state for user {i} unreadable: {exc}") from exc
    return out


# -- commands -----------------------------------------------------------------

def cmd_gen(cfg: RunConfig) -> int:
    if cfg.scenario is None:
        raise ValidationError("gen needs a scenario (via --config)")
    if cfg.out is None:
        raise ValidationError("gen needs --out")
    spec = cfg.scenario
    out = Path(cfg.out)
    _prepare_out(out, "scenario.json")
    csv_mirror = cfg.format == "csv"
    anchor, users = make_scenario(spec)

    _json_dump(out / "scenario.json", spec.to_dict())
    shared = out / "shared"
    shared.mkdir(exist_ok=True)
    _write_matrix(shared / "anchor.dcm", anchor, csv_mirror)
    (out / "private").mkdir(exist_ok=True)
    (out / "private" / "PRIVATE").write_text(
        "User-private state. Never visible to the analyst.\n")
    (out / "analyst").mkdir(exist_ok=True)
    for i, user in enumerate(users):
        bundle = encode_user(user, anchor)
        pdir = user_dir(out / "private", i)
        pdir.mkdir(exist_ok=True)
        _write_matrix(pdir / "x.dcm", user.x, csv_mirror)
        _write_matrix(pdir / "f.dcm", user.f, csv_mirror)
        _write_matrix(pdir / "e.dcm", user.e, csv_mirror)
        _json_dump(pdir / "labels.json", [int(v) for v in user.labels])
        adir = user_dir(out / "analyst", i)
        adir.mkdir(exist_ok=True)
        _write_matrix(adir / "x_tilde.dcm", bundle.x_tilde, csv_mirror)
        _write_matrix(adir / "a_i.dcm", bundle.a_i, csv_mirror)
        _json_dump(adir / "labels.json", [int(v) for v in bundle.labels])
    _json_dump(out / "analyst" / "manifest.json",
               {"users": spec.users, "latent_dim": spec.latent_dim, "anchor_rows": spec.anchor_rows})
    print(json.dumps({"out": str(out), "users": spec.users}, sort_keys=True))
    return EXIT_OK


def _target_for(method: Method, cfg: RunConfig, ell: int):
    if method is Method.ODC:
        return cfg.o_seed
    if method is Method.IMAKURA:
        if cfg.r_path:
            return read_matrix(cfg.r_path)
        if cfg.r_seed is not None:
            return np.random.default_rng(cfg.r_seed).random((ell, ell))
    return None


def _run_alignment(cfg: RunConfig, method: Method, bundles) -> AlignmentResult:
    anchors = [b.a_i for b in bundles]
    return align(method, anchors, _target_for(method, cfg, anchors[0].shape[1]))


def save_result(result: AlignmentResult, directory: Path, csv_mirror: bool = False) -> dict:
    directory.mkdir(parents=True, exist_ok=True)
    for i, g in enumerate(result.g):
        _write_matrix(directory / f"g_{i:03d}.dcm", g, csv_mirror)
    if result.target is not None:
        _write_matrix(directory / "target.dcm", result.target, csv_mirror)
    manifest = {
        "method": result.method.value,
        "users": len(result.g),
        "target_seed": result.target_seed,
        "target_file": "target.dcm" if result.target is not None else None,
        "anchor_residual": result.anchor_residual,
        "flags": result.flags,
    }
    _json_dump(directory / "manifest.json", manifest)
    return manifest


def load_result(directory: Path) -> AlignmentResult:
    try:
        manifest = json.loads((directory / "manifest.json").read_text())
    except (OSError, ValueError) as exc:
        raise IoError(f"cannot read alignment manifest in {directory}: {exc}") from exc
    g = [read_dcm(directory / f"g_{i:03d}.dcm") for i in range(manifest["users"])]
    target = read_dcm(directory / manifest["target_file"]) if manifest.get("target_file") else None
    return AlignmentResult(g=g, method=Method(manifest["method"]), target=target,
                           target_seed=manifest.get("target_seed"),
                           anchor_residual=manifest["anchor_residual"], flags=manifest.get("flags", []))


def cmd_align(cfg: RunConfig) -> int:
    root = _gen_root(cfg.input)
    if not cfg.methods:
        raise ValidationError("align needs --method")
    if cfg.out is None:
        raise ValidationError("align needs --out")
    spec = load_scenario(root)
    bundles = load_bundles(root, spec.users)
    out = Path(cfg.out)
    _prepare_out(out, "summary.json")
    summary = {}
    for method in cfg.methods:
        result = _run_alignment(cfg, method, bundles)
        summary[method.value] = save_result(result, out / method.value.lower(), cfg.format == "csv")
    _json_dump(out / "summary.json", summary)
    print(json.dumps(summary, indent=2, sort_keys=True))
    return EXIT_OK


def cmd_verify(cfg: RunConfig) -> int:
    root = _gen_root(cfg.input)
    spec = load_scenario(root)
    users = load_privates(root, spec.users)
    reports = {}
    if cfg.raw.get("results"):
        result = load_result(Path(cfg.raw["results"]))
        reports[result.method.value] = (result, concordance_report(users, result))
    else:
        if len(cfg.methods) != 1:
            raise ValidationError("verify needs exactly one --method (or --results)")
        bundles = load_bundles(root, spec.users)
        result = _run_alignment(cfg, cfg.methods[0], bundles)
        reports[result.method.value] = (result, concordance_report(users, result))
    payload = {
        name: {**rep.to_dict(), "anchor_residual": res.anchor_residual, "flags": res.flags,
               "condition": spec.condition.value}
        for name, (res, rep) in reports.items()
    }
    text = json.dumps(payload, indent=2, sort_keys=True)
    if cfg.out:
        out = Path(cfg.out)
        out.parent.mkdir(parents=True, exist_ok=True)
        out.write_text(text + "\n")
    print(text)
    return EXIT_OK if all(rep.satisfied for _, rep in reports.values()) else EXIT_VALIDATION


def cmd_cost(cfg: RunConfig) -> int:
    data = cfg.raw.get("cost", cfg.raw)
    params = costmodel.CostParams.from_dict(data)
    report = costmodel.cost_report(params)
    if cfg.format == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf)
        writer.writerow(["key", "value"])
        for key, value in _flatten(report):
            writer.writerow([key, value])
        text = buf.getvalue()
    else:
        text = json.dumps(report, indent=2, sort_keys=True) + "\n"
    if cfg.out:
        Path(cfg.out).write_text(text)
    sys.stdout.write(text)
    return EXIT_OK


def _flatten(obj, prefix=""):
    if isinstance(obj, dict):
        for k, v in obj.items():
            yield from _flatten(v, f"{prefix}{k}.")
    else:
        yield prefix[:-1], obj


def cmd_bench(cfg: RunConfig) -> int:
    data = dict(cfg.raw.get("sweep", cfg.raw))
    if cfg.seed is not None:
        data["seed"] = cfg.seed
    spec = bench.SweepSpec.from_dict(data)
    if cfg.out is None:
        raise ValidationError("bench needs --out")
    result = bench.run_sweep(spec, threads=cfg.threads)
    csv_path, json_path = bench.write_sweep(result, cfg.out)
    print(json.dumps({"csv": str(csv_path), "json": str(json_path),
                      "rows": len(result.rows), "skipped": len(result.skipped)}, sort_keys=True))
    return EXIT_OK


def cmd_demo(cfg: RunConfig) -> int:
    root = _gen_root(cfg.input)
    spec = load_scenario(root)
    anchor = read_dcm(root / "shared" / "anchor.dcm")
    bundles = load_bundles(root, spec.users)
    users = load_privates(root, spec.users)
    errors = []
    for bundle, user in zip(bundles, users):
        recovered = collude_reconstruct(anchor, bundle.a_i)
        errors.append(float(np.linalg.norm(recovered - user.f) / np.linalg.norm(user.f)))
    report = {"relative_errors": errors, "max_relative_error": max(errors),
              "recovered": bool(max(errors) <= 1e-8)}
    text = json.dumps(report, indent=2, sort_keys=True)
    if cfg.out:
        Path(cfg.out).write_text(text + "\n")
    print(text)
    return EXIT_OK


HANDLERS = {"gen": cmd_gen, "align": cmd_align, "verify": cmd_verify,
            "cost": cmd_cost, "bench": cmd_bench, "demo": cmd_demo}


# -- argument handling ----------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON config file")
    common.add_argument("--out", help="output directory (or file for verify/cost/demo)")
    common.add_argument("--format", choices=("json", "csv"), default=None)
    common.add_argument("--threads", type=int, help="cap on BLAS threads")
    common.add_argument("--seed", type=int, help="overrides the config seed")
    common.add_argument("--in", dest="input", help="gen output directory")
    common.add_argument("--method", action="append",
                        choices=("imakura", "kawakami", "odc", "all"), help="alignment method (repeatable)")
    common.add_argument("--o-seed", type=int, help="Haar seed for the ODC target (default: identity)")
    common.add_argument("--r", dest="r_path", help="Imakura target factor R as DCM1/CSV file")
    common.add_argument("--r-seed", type=int, help="draw Imakura R uniformly from [0,1) with this seed")
    common.add_argument("--results", help="verify: alignment result directory from 'align'")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="dcalign", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sub.add_parser(name, parents=[common])
    return parser


_METHOD_NAMES = {"imakura": Method.IMAKURA, "kawakami": Method.KAWAKAMI, "odc": Method.ODC}


def make_config(args: argparse.Namespace) -> RunConfig:
    raw = {}
    if args.config:
        try:
            raw = json.loads(Path(args.config).read_text())
        except OSError as exc:
            raise IoError(f"cannot read config {args.config}: {exc}") from exc
        except ValueError as exc:
            raise ValidationError(f"config {args.config} is not valid JSON: {exc}") from exc
    cfg = RunConfig(command=args.command, raw=raw)
    cfg.out = args.out or raw.get("out")
    cfg.input = args.input or raw.get("input")
    cfg.format = args.format or raw.get("format", "json")
    cfg.threads = args.threads if args.threads is not None else raw.get("threads")
    cfg.seed = args.seed
    cfg.o_seed = args.o_seed if args.o_seed is not None else raw.get("o_seed")
    cfg.r_path = args.r_path or raw.get("r_path")
    cfg.r_seed = args.r_seed if args.r_seed is not None else raw.get("r_seed")
    if args.results:
        cfg.raw = {**raw, "results": args.results}

    names = args.method or raw.get("methods") or ([raw["method"]] if "method" in raw else [])
    methods = []
    for name in names:
        name = str(name).lower()
        if name == "all":
            methods = list(Method)
            break
        if name not in _METHOD_NAMES:
            raise ValidationError(f"unknown method {name!r}")
        methods.append(_METHOD_NAMES[name])
    cfg.methods = list(dict.fromkeys(methods))

    if args.command == "gen" and raw:
        scen = dict(raw.get("scenario", raw))
        for key in ("out", "input", "format", "threads"):
            if "scenario" not in raw:
                scen.pop(key, None)
        if args.seed is not None:
            scen["seed"] = args.seed
        cfg.scenario = ScenarioSpec.from_dict(scen)
    return cfg


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = make_config(args)
        return HANDLERS[cfg.command](cfg)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except NumericalError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (IoError, OSError) as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return EXIT_IO
    except DCError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
