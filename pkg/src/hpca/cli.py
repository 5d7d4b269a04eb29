"""Command-line front end: fit / transform / diagnose / synth.

Every run prints one manifest (key=value lines) with resolved parameters,
wall time, the computed peak accumulator size, and output checksums.
Exit codes: 0 ok, 2 usage, 3 data/guard, 4 numeric.
"""

from __future__ import annotations

import argparse
import hashlib
import os
import statistics
import sys
import time

from .diagnostics import compare_to_exact, exact_reference
from .errors import (
    AsymmetricError,
    DimensionError,
    GuardError,
    HpcaError,
    ModelFormatError,
    NoConvergenceError,
    ParseError,
    RankDeficientError,
    StreamError,
)
from .hashing import HashSpec, derive_seeds, identity_hash
from .hpca_core import (
    HpcaConfig,
    fit,
    fit_transform,
    load_model,
    project_unwhitened,
    project_whitened,
    save_model,
    working_set_bytes,
)
from .sparse_io import parse_libsvm, stream_rows, synth_lowrank, write_libsvm

EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_NUMERIC = 4

_DATA_ERRORS = (ParseError, DimensionError, StreamError, GuardError, ModelFormatError, OSError)
_NUMERIC_ERRORS = (RankDeficientError, NoConvergenceError, AsymmetricError)


def _sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            h.update(block)
    return h.hexdigest()


def _print_manifest(entries) -> None:
    print("manifest:")
    for key, value in entries:
        print(f"  {key}={value}")


def _default_parallel() -> int:
    try:
        return max(1, int(os.environ.get("HPCA_THREADS", "1")))
    except ValueError:
        return 1


def _build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="hpca", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)

    p_fit = sub.add_parser("fit", help="fit a hashed PCA model on a libsvm file")
    p_fit.add_argument("--input", required=True)
    p_fit.add_argument("--k", type=int, required=True)
    p_fit.add_argument("--d", type=int, required=True)
    p_fit.add_argument("--l", type=int, default=None)
    p_fit.add_argument("--seed", type=int, default=0)
    p_fit.add_argument("--center", action="store_true")
    p_fit.add_argument("--output", default="hpca_model.txt")
    p_fit.add_argument("--declared-p", type=int, default=None)
    p_fit.add_argument("--parallel", type=int, default=_default_parallel())

    p_tr = sub.add_parser("transform", help="project a libsvm file with a fitted model")
    p_tr.add_argument("--model", required=True)
    p_tr.add_argument("--input", required=True)
    p_tr.add_argument("--output", default="hpca_scores.tsv")
    p_tr.add_argument("--unwhitened", action="store_true")

    p_di = sub.add_parser("diagnose", help="measure subspace quality against the exact oracle")
    p_di.add_argument("--input", required=True)
    p_di.add_argument("--k", type=int, required=True)
    p_di.add_argument("--d", type=int, required=True)
    p_di.add_argument("--l", type=int, default=None)
    p_di.add_argument("--epsilon", type=float, default=0.5)
    p_di.add_argument("--delta", type=float, default=0.01)
    p_di.add_argument("--seeds", type=int, default=1)
    p_di.add_argument("--seed", type=int, default=0)
    p_di.add_argument(
        "--identity",
        action="store_true",
        help="use the identity map instead of hashing (requires --d equal to the data width)",
    )

    p_sy = sub.add_parser("synth", help="generate a planted-spectrum libsvm file")
    p_sy.add_argument("--n", type=int, required=True)
    p_sy.add_argument("--p", type=int, required=True)
    p_sy.add_argument("--rank", type=int, required=True)
    p_sy.add_argument("--spectrum", required=True, help="comma-separated nonincreasing positives")
    p_sy.add_argument("--noise", type=float, default=0.0)
    p_sy.add_argument("--density", type=float, default=1.0)
    p_sy.add_argument("--seed", type=int, default=0)
    p_sy.add_argument("--output", required=True)
    return ap


def _make_config(args, parallel=1, center=False) -> HpcaConfig:
    seed_h, seed_xi, seed_omega = derive_seeds(args.seed)
    return HpcaConfig(
        k=args.k,
        d=args.d,
        hash=HashSpec(args.d, seed_h, seed_xi),
        l=args.l,
        seed_omega=seed_omega,
        center=center,
        parallel=parallel,
    )


def _cmd_fit(args) -> int:
    t0 = time.monotonic()
    ds = parse_libsvm(args.input, declared_p=args.declared_p)
    cfg = _make_config(args, parallel=args.parallel, center=args.center)
    model = fit(ds, cfg)
    save_model(model, args.output)
    wall = time.monotonic() - t0
    _print_manifest(
        [
            ("command", "fit"),
            ("input", args.input),
            ("output", args.output),
            ("n", ds.n),
            ("p", ds.p),
            ("k", cfg.k),
            ("d", cfg.d),
            ("l", cfg.l),
            ("seed", args.seed),
            ("seed_h", cfg.hash.seed_h),
            ("seed_xi", cfg.hash.seed_xi),
            ("seed_omega", cfg.seed_omega),
            ("center", int(cfg.center)),
            ("parallel", cfg.parallel),
            ("wall_seconds", f"{wall:.3f}"),
            ("peak_accumulator_bytes", working_set_bytes(cfg.d, cfg.l, cfg.k, cfg.center)),
            ("model_sha256", _sha256(args.output)),
        ]
    )
    return 0


def _cmd_transform(args) -> int:
    t0 = time.monotonic()
    model = load_model(args.model)
    ds = parse_libsvm(args.input)
    project = project_unwhitened if args.unwhitened else project_whitened
    n_rows = 0
    with open(args.output, "w") as fh:
        for row in stream_rows(ds):
            score = project(model, row)
            fh.write("\t".join(repr(float(v)) for v in score) + "\n")
            n_rows += 1
    wall = time.monotonic() - t0
    _print_manifest(
        [
            ("command", "transform"),
            ("model", args.model),
            ("input", args.input),
            ("output", args.output),
            ("rows", n_rows),
            ("k", model.k),
            ("d", model.d),
            ("whitened", int(not args.unwhitened)),
            ("wall_seconds", f"{wall:.3f}"),
            ("scores_sha256", _sha256(args.output)),
        ]
    )
    return 0


def _cmd_diagnose(args) -> int:
    t0 = time.monotonic()
    ds = parse_libsvm(args.input)
    if args.identity and args.d != ds.p:
        raise DimensionError(f"--identity requires --d {args.d} to equal the data width {ds.p}")
    exact = exact_reference(ds, args.k)
    sins = []
    for i in range(args.seeds):
        seed_h, seed_xi, seed_omega = derive_seeds(args.seed + i)
        hasher = identity_hash(ds.p) if args.identity else HashSpec(args.d, seed_h, seed_xi)
        cfg = HpcaConfig(
            k=args.k,
            d=args.d,
            hash=hasher,
            l=args.l,
            seed_omega=seed_omega,
        )
        report = compare_to_exact(ds, cfg, args.epsilon, args.delta, exact=exact)
        print(f"seed={args.seed + i}")
        print(report.to_text())
        sins.append(report.sin_phi_frobenius)
    print(f"median_sin_phi_frobenius={statistics.median(sins)!r}")
    wall = time.monotonic() - t0
    _print_manifest(
        [
            ("command", "diagnose"),
            ("input", args.input),
            ("n", ds.n),
            ("p", ds.p),
            ("k", args.k),
            ("d", args.d),
            ("epsilon", args.epsilon),
            ("delta", args.delta),
            ("seeds", args.seeds),
            ("wall_seconds", f"{wall:.3f}"),
        ]
    )
    return 0


def _cmd_synth(args) -> int:
    t0 = time.monotonic()
    try:
        spectrum = [float(t) for t in args.spectrum.split(",") if t.strip()]
    except ValueError:
        raise DimensionError(f"bad --spectrum value: {args.spectrum!r}") from None
    ds = synth_lowrank(
        n=args.n,
        p=args.p,
        r=args.rank,
        spectrum=spectrum,
        noise_sigma=args.noise,
        density=args.density,
        seed=args.seed,
    )
    write_libsvm(ds, args.output)
    wall = time.monotonic() - t0
    _print_manifest(
        [
            ("command", "synth"),
            ("output", args.output),
            ("n", ds.n),
            ("p", ds.p),
            ("rank", args.rank),
            ("noise", args.noise),
            ("density", args.density),
            ("seed", args.seed),
            ("wall_seconds", f"{wall:.3f}"),
            ("output_sha256", _sha256(args.output)),
        ]
    )
    return 0


_COMMANDS = {
    "fit": _cmd_fit,
    "transform": _cmd_transform,
    "diagnose": _cmd_diagnose,
    "synth": _cmd_synth,
}


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    if args.command in ("fit", "diagnose") and args.k >= args.d:
        parser.error(f"--k {args.k} must be smaller than --d {args.d}")
    try:
        return _COMMANDS[args.command](args)
    except _NUMERIC_ERRORS as exc:
        print(f"hpca: numeric error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except _DATA_ERRORS as exc:
        print(f"hpca: data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
