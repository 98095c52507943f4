"""Command-line front end.

Exit codes: 0 success, 2 usage, 3 unreadable or inconsistent input,
4 unsupported instance (exact W2 restrictions), 5 degenerate fit under
``--strict``.

Every random draw derives from ``--seed``: the i-th consumer gets a PCG64
generator seeded with child ``i`` of ``numpy.random.SeedSequence(seed)``
(see :func:`slicematch.slicing.spawn_seeds`).  ``iterate`` draws one 63-bit
step seed per step from that generator and builds the step's directions
from it; ``match --seed`` uses the step-0 matrix of the same scheme, so
``match`` and a one-step ``iterate`` agree.  The scheme is echoed in each
JSON output under ``"rng"``.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import io
from .distances import UnsupportedInstanceError, sw2, w2_exact
from .matching import IterationTrace, StepSchedule, apply_operator, iterate, sliced_residual
from .measure import DiscreteMeasure, MeasureError, check_same_dim, moments, to_image
from .registration import (
    DegenerateMeasureError,
    register_axis_scaling,
    register_scale_shift,
    register_translation,
)
from .slicing import (
    NotOrthogonalError,
    make_rng,
    rotation,
    sample_haar_orthogonal,
    spawn_seeds,
    validate_orthogonal,
)

EXIT_OK, EXIT_USAGE, EXIT_INPUT, EXIT_UNSUPPORTED, EXIT_DEGENERATE = 0, 2, 3, 4, 5


class CliError(Exception):
    def __init__(self, message: str, code: int):
        super().__init__(message)
        self.code = code


def _rng_meta(seed: int | None) -> dict | None:
    if seed is None:
        return None
    return {"seed": seed, "bit_generator": "PCG64", "streams": "SeedSequence(seed).spawn(k)"}


def _child_rng(seed: int) -> np.random.Generator:
    return make_rng(spawn_seeds(seed, 1)[0])


def _first_step_matrix(seed: int, n: int) -> np.ndarray:
    """The Haar matrix that ``iterate`` with the same seed uses at step 0."""
    step_seed = int(_child_rng(seed).integers(0, 2**63 - 1))
    return sample_haar_orthogonal(make_rng(step_seed), n)


def _moments_dict(nu: DiscreteMeasure) -> dict:
    mom = moments(nu)
    return {"mean": [float(v) for v in mom.mean], "m2": mom.second_moment}


def _dump(obj) -> str:
    return json.dumps(obj, indent=2)


def _load_pair(src: str, dst: str):
    sigma, _ = io.load_measure(src)
    mu, dst_shape = io.load_measure(dst)
    check_same_dim(sigma, mu)
    return sigma, mu, dst_shape


def _load_matrix(path: str, n: int) -> np.ndarray:
    P = validate_orthogonal(io.read_matrix_csv(path))
    if P.shape[0] != n:
        raise MeasureError(f"matrix in {path} is {P.shape[0]}x{P.shape[0]}, measures are in R^{n}")
    return P


def cmd_match(args) -> int:
    sigma, mu, dst_shape = _load_pair(args.src, args.dst)
    if args.matrix:
        P = _load_matrix(args.matrix, sigma.dim)
    elif args.angle is not None:
        if sigma.dim != 2:
            raise MeasureError("--angle needs 2-D measures")
        P = rotation(args.angle)
    else:
        P = _first_step_matrix(args.seed, sigma.dim)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    nu = apply_operator(sigma, mu, P)
    io.write_measure_csv(out / "matched.csv", nu)
    summary = {
        "source": _moments_dict(sigma),
        "target": _moments_dict(mu),
        "matched": _moments_dict(nu),
        "sliced_residual": sliced_residual(sigma, mu, P),
        "P": P.tolist(),
        "rng": None if (args.matrix or args.angle is not None) else _rng_meta(args.seed),
    }
    (out / "summary.json").write_text(_dump(summary) + "\n")
    if dst_shape is not None:
        io.write_image(out / "matched.png", to_image(nu, dst_shape))
    return EXIT_OK


def cmd_iterate(args) -> int:
    sigma, mu, _ = _load_pair(args.src, args.dst)
    try:
        schedule = StepSchedule.parse(args.schedule, args.steps)
    except ValueError as exc:
        raise CliError(str(exc), EXIT_USAGE) from None
    trace = iterate(
        sigma,
        mu,
        schedule,
        sampler=args.sampler,
        rng=_child_rng(args.seed),
        tol=args.tol,
        exact=args.exact,
    )
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "trace.jsonl", "w") as fh:
        trace.write_jsonl(fh)
    io.write_measure_csv(out / "final.csv", trace.final)
    meta = {"schedule": args.schedule, "sampler": args.sampler, "steps": args.steps, "rng": _rng_meta(args.seed)}
    (out / "run.json").write_text(_dump(meta) + "\n")
    return EXIT_OK


def cmd_register(args) -> int:
    sigma, eta, _ = _load_pair(args.src, args.dst)
    kind = args.distance.upper()
    if args.model == "translation":
        S = register_translation(sigma, eta)
        report = {"map": S.to_dict(), "distance_kind": kind, "degenerate": False}
    elif args.model == "scale-shift":
        if kind == "SW2":
            if args.dirs is None:
                raise CliError("--distance sw2 needs --dirs", EXIT_USAGE)
            rep = register_scale_shift(sigma, eta, "SW2", args.dirs, _child_rng(args.seed), args.seed)
        else:
            rep = register_scale_shift(sigma, eta, "W2")
        report = rep.to_dict()
    elif args.model.startswith("axis:"):
        if kind != "W2":
            raise CliError("axis registration is defined for w2 only", EXIT_USAGE)
        P = _load_matrix(args.model[len("axis:"):], sigma.dim)
        report = register_axis_scaling(sigma, eta, P).to_dict()
    else:
        raise CliError(f"unknown model {args.model!r}", EXIT_USAGE)
    report["rng"] = _rng_meta(args.seed) if kind == "SW2" else None
    print(_dump(report))
    if args.strict and report["degenerate"]:
        return EXIT_DEGENERATE
    return EXIT_OK


def cmd_w2(args) -> int:
    sigma, mu, _ = _load_pair(args.a, args.b)
    print(json.dumps({"value": w2_exact(sigma, mu)}))
    return EXIT_OK


def cmd_sw2(args) -> int:
    sigma, mu, _ = _load_pair(args.a, args.b)
    est = sw2(sigma, mu, args.dirs, _child_rng(args.seed), seed=args.seed)
    print(
        json.dumps(
            {
                "value": est.value,
                "std_error": est.std_error,
                "num_directions": est.num_directions,
                "rng": _rng_meta(args.seed),
            }
        )
    )
    return EXIT_OK


def cmd_make_ortho(args) -> int:
    if args.angle is not None:
        if args.dim != 2:
            raise CliError("--angle needs --dim 2", EXIT_USAGE)
        P = rotation(args.angle)
    else:
        P = _first_step_matrix(args.seed, args.dim)
    sys.stdout.write(io.format_matrix_csv(P))
    return EXIT_OK


REPORT_FIELDS = ("sliced_residual", "mean_gap_sq", "m2", "w2_exact")


def aggregate_traces(traces: list[list[dict]]) -> list[dict]:
    """Per-step count, mean and standard error of each numeric trace field."""
    depth = max(len(t) for t in traces)
    rows = []
    for k in range(depth):
        recs = [t[k] for t in traces if len(t) > k]
        row = {"k": k, "runs": len(recs)}
        for name in REPORT_FIELDS:
            vals = np.array([r[name] for r in recs if r.get(name) is not None], dtype=float)
            if vals.size == 0:
                row[f"{name}_mean"] = row[f"{name}_stderr"] = None
                continue
            row[f"{name}_mean"] = float(vals.mean())
            row[f"{name}_stderr"] = float(vals.std(ddof=1) / np.sqrt(vals.size)) if vals.size > 1 else 0.0
        rows.append(row)
    return rows


def _plot_decay(rows: list[dict], path: Path) -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(5, 3.5))
    for name in ("sliced_residual", "mean_gap_sq", "w2_exact"):
        pts = [(r["k"], r[f"{name}_mean"]) for r in rows if r[f"{name}_mean"] not in (None, 0.0)]
        if pts:
            ks, vs = zip(*pts)
            ax.semilogy(ks, vs, marker="o", ms=3, label=name)
    ax.set_xlabel("step k")
    ax.set_ylabel("mean over runs")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=100)
    plt.close(fig)


def cmd_report(args) -> int:
    traces = []
    for p in args.traces:
        try:
            with open(p) as fh:
                rows = IterationTrace.read_jsonl(fh)
        except (OSError, ValueError) as exc:
            raise CliError(f"{p}: {exc}", EXIT_INPUT) from None
        if not rows:
            raise CliError(f"{p}: empty trace", EXIT_INPUT)
        traces.append(rows)
    rows = aggregate_traces(traces)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    cols = list(rows[0].keys())
    with open(out / "report.csv", "w") as fh:
        fh.write(",".join(cols) + "\n")
        for r in rows:
            fh.write(",".join("" if r[c] is None else repr(r[c]) for c in cols) + "\n")
    _plot_decay(rows, out / "decay.png")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="slicematch", description="Slice-matching transport and registration tools.")
    sub = p.add_subparsers(dest="command", required=True)

    m = sub.add_parser("match", help="push SRC through the slice-matching map to DST")
    m.add_argument("src")
    m.add_argument("dst")
    g = m.add_mutually_exclusive_group()
    g.add_argument("--matrix", help="CSV file holding the orthogonal matrix")
    g.add_argument("--angle", type=float, help="use the 2-D rotation by this angle (radians)")
    m.add_argument("--seed", type=int, default=0, help="seed for a Haar matrix when no matrix is given")
    m.add_argument("--out", required=True)
    m.set_defaults(func=cmd_match)

    it = sub.add_parser("iterate", help="run the iterative slice-matching scheme")
    it.add_argument("src")
    it.add_argument("dst")
    it.add_argument("--schedule", default="const:1.0", help="const:G or harmonic:C")
    it.add_argument("--sampler", choices=["matrix", "direction"], default="matrix")
    it.add_argument("--steps", type=int, required=True, help="maximum number of steps K (>= 1)")
    it.add_argument("--seed", type=int, required=True)
    it.add_argument("--tol", type=float, default=1e-10)
    it.add_argument("--exact", action="store_true", help="record exact W2 to the target each step")
    it.add_argument("--out", required=True)
    it.set_defaults(func=cmd_iterate)

    r = sub.add_parser("register", help="closed-form affine registration")
    r.add_argument("src")
    r.add_argument("dst")
    r.add_argument("--model", default="scale-shift", help="translation | scale-shift | axis:PATH_TO_P")
    r.add_argument("--distance", choices=["w2", "sw2"], default="w2")
    r.add_argument("--dirs", type=int)
    r.add_argument("--seed", type=int, default=0)
    r.add_argument("--strict", action="store_true", help="exit 5 when the fitted scale is not positive")
    r.set_defaults(func=cmd_register)

    w = sub.add_parser("w2", help="exact W2 between equal-size uniform clouds")
    w.add_argument("a")
    w.add_argument("b")
    w.set_defaults(func=cmd_w2)

    s = sub.add_parser("sw2", help="Monte-Carlo sliced W2")
    s.add_argument("a")
    s.add_argument("b")
    s.add_argument("--dirs", type=int, required=True)
    s.add_argument("--seed", type=int, required=True)
    s.set_defaults(func=cmd_sw2)

    o = sub.add_parser("make-ortho", help="print an orthogonal matrix as CSV")
    o.add_argument("--dim", type=int, required=True)
    o.add_argument("--seed", type=int, default=0)
    o.add_argument("--angle", type=float)
    o.set_defaults(func=cmd_make_ortho)

    rp = sub.add_parser("report", help="aggregate iteration traces")
    rp.add_argument("traces", nargs="+")
    rp.add_argument("--out", default=".")
    rp.set_defaults(func=cmd_report)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    for flag in ("steps", "dirs", "dim"):
        value = getattr(args, flag, None)
        if value is not None and value < 1:
            parser.error(f"--{flag} must be positive")
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except UnsupportedInstanceError as exc:
        print(f"unsupported instance: {exc}", file=sys.stderr)
        return EXIT_UNSUPPORTED
    except DegenerateMeasureError as exc:
        print(f"degenerate input: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE if getattr(args, "strict", False) else EXIT_INPUT
    except (io.InputFormatError, MeasureError, NotOrthogonalError, OSError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
