"""Command-line interface.

Verbs: ``dist``, ``mean``, ``interp``, ``pca``, ``anisotropy``, ``simulate``
and ``synth``.  Exit status is 0 on success, 1 on a domain error (bad
matrix, failed convergence, unreadable file) and 2 on a usage error.
Numbers are printed with 12 significant digits.
"""

from __future__ import annotations

import argparse
import sys
import warnings
from pathlib import Path

import numpy as np

from . import anisotropy as aniso
from . import dwi_io, simulation, synthetic
from .errors import NotPositiveSemidefinite, SpdError
from .geodesics import Geodesic, TensorField, field_interpolate
from .means import frechet_mean
from .metrics import NAMES, Metric, distance
from .tangent_pca import fit_pca, pc_path


def _g(x) -> str:
    return "%.12g" % x


def _floats(text: str) -> list[float]:
    try:
        return [float(t) for t in text.replace(";", ",").split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _ints(text: str) -> tuple:
    try:
        return tuple(int(t) for t in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _positive_int(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}")
    if v < 1:
        raise argparse.ArgumentTypeError("must be at least 1")
    return v


def _emit(text: str, out) -> None:
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _matrix_csv(S) -> str:
    return "".join(",".join(_g(v) for v in row) + "\n" for row in np.asarray(S))


def _is_field(path) -> bool:
    p = Path(path)
    if p.suffix.lower() == ".json":
        return True
    with open(p, encoding="utf-8") as fh:
        for line in fh:
            s = line.strip()
            if s and not s.startswith("#"):
                return s.startswith("x,")
    return False


def _load_samples(paths):
    """Stack of matrices from tensor files and/or the unmasked voxels of fields."""
    out = []
    for p in paths:
        if _is_field(p):
            tf = dwi_io.read_field(p)
            out.extend(tf.tensors[~tf.mask])
        else:
            out.append(dwi_io.read_tensor(p))
    return np.stack(out)


def _metric(args) -> Metric:
    return Metric.of(args.metric, args.alpha)


# ---------------------------------------------------------------- verbs


def cmd_dist(args) -> int:
    m = _metric(args)
    if _is_field(args.a) or _is_field(args.b):
        fa, fb = dwi_io.read_field(args.a), dwi_io.read_field(args.b)
        if fa.dims != fb.dims:
            raise SpdError(f"field dims differ: {fa.dims} vs {fb.dims}")
        lines = ["x,y,z,distance\n"]
        for idx in np.ndindex(*fa.dims):
            if fa.mask[idx] or fb.mask[idx]:
                continue
            d = distance(fa.tensors[idx], fb.tensors[idx], m)
            lines.append(f"{idx[0]},{idx[1]},{idx[2]},{_g(d)}\n")
        _emit("".join(lines), args.out)
    else:
        d = distance(dwi_io.read_tensor(args.a), dwi_io.read_tensor(args.b), m)
        _emit(_g(d) + "\n", args.out)
    return 0


def cmd_mean(args) -> int:
    S = _load_samples(args.files)
    w = None
    if args.weights:
        text = Path(args.weights).read_text(encoding="utf-8")
        w = np.array(_floats(text.replace("\n", ",")))
    res = frechet_mean(S, _metric(args), w, max_iter=args.max_iter, tol=args.tol)
    print(f"iterations={res.iterations} objective={_g(res.objective)}", file=sys.stderr)
    _emit(_matrix_csv(res.estimate), args.out)
    return 0


def cmd_interp(args) -> int:
    m = _metric(args)
    if args.factor is not None:
        tf = dwi_io.read_field(args.a)
        out = field_interpolate(tf, args.factor, m, weighting=args.weighting,
                                threads=args.threads)
        print(f"weighting={args.weighting} metric={m} masked={int(out.mask.sum())}",
              file=sys.stderr)
        if args.out:
            dwi_io.write_field(out, args.out)
        else:
            sys.stdout.write(dwi_io.field_to_csv(out))
        return 0
    if args.b is None:
        raise _Usage("interp needs two tensor files unless --factor is given")
    g = Geodesic(dwi_io.read_tensor(args.a), dwi_io.read_tensor(args.b), m)
    if args.steps is not None:
        k = g.S1.shape[0]
        head = ["w", "det"] + [f"s{i + 1}{j + 1}" for i in range(k) for j in range(i, k)]
        lines = [",".join(head) + "\n"]
        iu = np.triu_indices(k)
        for w in np.linspace(0.0, 1.0, args.steps):
            S = g(w)
            vals = [w, np.linalg.det(S)] + list(S[iu])
            lines.append(",".join(_g(v) for v in vals) + "\n")
        _emit("".join(lines), args.out)
        return 0
    _emit(_matrix_csv(g(args.w)), args.out)
    return 0


def cmd_pca(args) -> int:
    S = _load_samples(args.files)
    model = fit_pca(S)
    frac = model.explained()
    lines = ["component,variance,fraction\n"]
    for j in range(model.p):
        lines.append(f"{j + 1},{_g(model.variances[j])},{_g(frac[j])}\n")
    if args.scores:
        lines.append("sample," + ",".join(f"pc{j + 1}" for j in range(model.p)) + "\n")
        for i, row in enumerate(model.scores):
            lines.append(f"{i}," + ",".join(_g(v) for v in row) + "\n")
    if args.path is not None:
        j = args.component
        lines.append("c," + ",".join(f"s{a + 1}{b + 1}" for a in range(model.k)
                                     for b in range(a, model.k)) + "\n")
        iu = np.triu_indices(model.k)
        for c in args.path:
            P = pc_path(model, j, c)
            lines.append(_g(c) + "," + ",".join(_g(v) for v in P[iu]) + "\n")
    _emit("".join(lines), args.out)
    return 0


def _pgm(values: np.ma.MaskedArray, scale: float) -> bytes:
    """8-bit P5 image, x across, y down, z slices stacked vertically."""
    nx, ny, nz = values.shape
    v = np.ma.filled(values, 0.0) / scale
    img = np.clip(np.rint(np.clip(v, 0.0, 1.0) * 255), 0, 255).astype(np.uint8)
    rows = np.concatenate([img[:, :, z].T for z in range(nz)], axis=0)
    head = f"P5\n{nx} {ny * nz}\n255\n".encode("ascii")
    return head + rows.tobytes()


def cmd_anisotropy(args) -> int:
    tf = dwi_io.read_field(args.field)
    kind = args.kind
    alphas = args.alpha if kind == "faalpha" else [None]
    if kind == "faalpha" and not alphas:
        raise _Usage("faalpha needs --alpha")
    maps = [aniso.anisotropy_map(tf, kind, a) for a in alphas]
    failed = int(sum((mp.mask & ~tf.mask).sum() for mp in maps))
    print(f"voxels={int((~tf.mask).sum())} failed={failed}", file=sys.stderr)
    if args.format == "pgm":
        if len(maps) != 1:
            raise _Usage("PGM output takes a single alpha")
        scale = args.ga_max if kind == "ga" else 1.0
        data = _pgm(maps[0], scale)
        if args.out:
            Path(args.out).write_bytes(data)
        else:
            sys.stdout.buffer.write(data)
        return 0
    names = [str(aniso.AnisotropyKind.of(kind, a)) for a in alphas]
    lines = ["x,y,z," + ",".join(names) + "\n"]
    for idx in np.ndindex(*tf.dims):
        if tf.mask[idx]:
            continue
        vals = ["" if mp.mask[idx] else _g(mp.data[idx]) for mp in maps]
        lines.append(f"{idx[0]},{idx[1]},{idx[2]}," + ",".join(vals) + "\n")
    _emit("".join(lines), args.out)
    return 0


def cmd_simulate(args) -> int:
    common = dict(reps=args.reps, seed=args.seed, threads=args.threads,
                  omega_rotation=args.rotation_seed, estimators=tuple(args.estimators),
                  max_failure_rate=args.max_failure_rate)
    if args.table is not None:
        configs = simulation.table_configs(args.table, model3=args.model3,
                                           sigma=args.sigma, **common)
    else:
        if args.model is None or args.n is None:
            raise _Usage("simulate needs --table, or --model and --n")
        lam = args.lambda_ or list(simulation.TABLE_LAMBDAS[2])
        configs = [simulation.StudyConfig(
            omega_eigenvalues=lam,
            model=simulation.ErrorModel(args.model, args.sigma, args.model3),
            n=n, **common) for n in args.n]
    results = []
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        for cfg in configs:
            res = simulation.run_study(cfg)
            print(f"model={cfg.model.tag} n={cfg.n} done", file=sys.stderr)
            results.append(res)
    _emit(simulation.to_csv(results), args.out)
    return 0


def cmd_synth(args) -> int:
    if args.pattern == "geodesic":
        if args.start and args.end:
            S1, S2 = dwi_io.read_tensor(args.start), dwi_io.read_tensor(args.end)
        else:
            S1, S2 = synthetic.anisotropic_pair()
        tf = synthetic.geodesic_field(S1, S2, args.steps, Metric.of(args.metric))
    elif args.pattern == "two-region":
        tf = synthetic.two_region(args.dims)
    else:
        tf = synthetic.crossing(args.dims, noise=args.noise, seed=args.seed)
    dwi_io.write_field(tf, args.out)
    return 0


# ---------------------------------------------------------------- parser


class _Usage(Exception):
    pass


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="spdstats", description="Statistics for covariance matrices and diffusion tensors.")
    sub = p.add_subparsers(dest="verb", required=True)

    def add(name, fn, help_):
        sp = sub.add_parser(name, help=help_)
        sp.set_defaults(fn=fn)
        sp.add_argument("--threads", type=_positive_int, default=1,
                        help="worker threads; output does not depend on it")
        sp.add_argument("--out", help="output file (default: standard output)")
        return sp

    def metric_args(sp, default="procrustes"):
        sp.add_argument("--metric", default=default, help=f"one of {', '.join(NAMES)}")
        sp.add_argument("--alpha", type=float, help="exponent for the power metric")

    sp = add("dist", cmd_dist, "distance between two tensors or two aligned fields")
    metric_args(sp, "euclidean")
    sp.add_argument("a")
    sp.add_argument("b")

    sp = add("mean", cmd_mean, "Fréchet mean of tensors")
    metric_args(sp)
    sp.add_argument("--weights", help="file of nonnegative weights summing to 1")
    sp.add_argument("--max-iter", type=_positive_int, default=1000)
    sp.add_argument("--tol", type=float, default=1e-10)
    sp.add_argument("files", nargs="+")

    sp = add("interp", cmd_interp, "geodesic point, path, or field refinement")
    metric_args(sp)
    mode = sp.add_mutually_exclusive_group(required=True)
    mode.add_argument("--w", type=float, help="point at parameter w on the path A -> B")
    mode.add_argument("--steps", type=_positive_int, help="equally spaced path points")
    mode.add_argument("--factor", type=_positive_int, help="refine field A by this factor")
    sp.add_argument("--weighting", choices=("bilinear", "inverse_distance"),
                    default="bilinear")
    sp.add_argument("a")
    sp.add_argument("b", nargs="?")

    sp = add("pca", cmd_pca, "tangent-space PCA about the Procrustes mean")
    sp.add_argument("--scores", action="store_true", help="also print PC scores")
    sp.add_argument("--component", type=_positive_int, default=1)
    sp.add_argument("--path", type=_floats, help="c values for the PC path, e.g. -2,0,2")
    sp.add_argument("files", nargs="+")

    sp = add("anisotropy", cmd_anisotropy, "FA, PA, GA or FA(alpha) map of a field")
    sp.add_argument("--kind", choices=aniso.KINDS, default="fa")
    sp.add_argument("--alpha", type=_floats, default=[], help="alpha value(s) for faalpha")
    sp.add_argument("--format", choices=("csv", "pgm"), default="csv")
    sp.add_argument("--ga-max", type=float, default=3.0, help="GA value shown as white")
    sp.add_argument("field")

    sp = add("simulate", cmd_simulate, "Monte Carlo comparison of mean estimators")
    sp.add_argument("--table", type=int, choices=(2, 3))
    sp.add_argument("--model", choices=("I", "II", "III", "IV", "1", "2", "3", "4"))
    sp.add_argument("--n", type=_ints, help="sample size(s), comma-separated")
    sp.add_argument("--sigma", type=float, default=0.1)
    sp.add_argument("--reps", type=_positive_int, default=1000)
    sp.add_argument("--seed", type=int, default=20240101)
    sp.add_argument("--lambda", dest="lambda_", type=_floats, help="eigenvalues of Omega")
    sp.add_argument("--model3", choices=simulation.MODEL3_VARIANTS, default="log_outer",
                    help="construction used for error model III")
    sp.add_argument("--rotation-seed", type=int, help="rotate Omega by a fixed Haar draw")
    sp.add_argument("--estimators", default="ECSHLRF", help="subset of ECSHLRF")
    sp.add_argument("--max-failure-rate", type=float, default=0.01,
                    help="abort when an estimator fails in more than this fraction")

    sp = add("synth", cmd_synth, "write a synthetic tensor field")
    sp.add_argument("--pattern", choices=synthetic.PATTERNS, required=True)
    sp.add_argument("--dims", type=_ints, default=(8, 8, 1))
    sp.add_argument("--steps", type=_positive_int, default=11)
    sp.add_argument("--start", help="first tensor for the geodesic pattern")
    sp.add_argument("--end", help="last tensor for the geodesic pattern")
    sp.add_argument("--metric", default="procrustes")
    sp.add_argument("--noise", type=float, default=0.0)
    sp.add_argument("--seed", type=int, default=0)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.verb == "synth":
        if not args.out:
            parser.error("synth needs --out")
        if len(args.dims) != 3:
            parser.error("--dims needs three integers")
    try:
        return args.fn(args)
    except _Usage as exc:
        parser.error(str(exc))
    except NotPositiveSemidefinite as exc:
        print(f"error: {exc} (eigenvalue {exc.eigenvalue:.12g})", file=sys.stderr)
        return 1
    except (SpdError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
