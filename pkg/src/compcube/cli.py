"""``compcube`` command line interface.

Every command is a pure function of its input files, configuration and
seed; repeated runs produce byte-identical output. Exit status is 0 on
success and 2 on any input, configuration or output error.
"""

from __future__ import annotations

import argparse
import csv
import logging
import sys
from pathlib import Path

import numpy as np

from compcube.coordinates import build_contrast_matrix, coords, transform_logcontrasts
from compcube.cube import CubeError, decompose, full_interactive
from compcube.io import (
    InputError,
    cell_labels,
    load_config,
    read_long_csv,
    render_csv,
    write_output,
)
from compcube.stats import bootstrap_ci, coordinate_matrix, pca

log = logging.getLogger("compcube")


def _groups(text):
    return [g.strip() for g in text.split(",") if g.strip()] if text else None


def _load(args):
    config = load_config(args.config)
    cubes = read_long_csv(args.input, config.factors)
    return config, cubes


def _matrix(args, config, cubes):
    V = build_contrast_matrix(config.factors)
    normalized = config.normalized and not getattr(args, "no_norm", False)
    mat = coordinate_matrix(cubes, V, normalized)
    groups = _groups(getattr(args, "groups", None))
    if groups:
        try:
            mat = mat.select(groups)
        except ValueError as exc:
            raise InputError(str(exc)) from None
    return V, mat


def _need_dir(args):
    if args.out is None:
        raise InputError("--out DIR is required for this command")
    return Path(args.out)


def cmd_coords(args):
    config, cubes = _load(args)
    _, mat = _matrix(args, config, cubes)
    rows = ([oid or ""] + [float(v) for v in row] for oid, row in zip(mat.ids, mat.values))
    write_output(args.out, render_csv(["id"] + mat.labels, rows), args.force)


def _long_rows(cubes, kappa=None):
    for cube in cubes:
        if kappa is not None:
            cube = cube.closed(kappa)
        for levels, value in cube.cells():
            yield [cube.obs_id or "", *levels, value]


def cmd_decompose(args):
    config, cubes = _load(args)
    results = [decompose(c) for c in cubes]
    labels = results[0].labels()
    choices = labels + ["int", "all"]
    if args.part not in choices:
        raise InputError(f"unknown part {args.part!r}; choose from {', '.join(choices)}")
    selected = labels if args.part == "all" else [args.part]
    if len(selected) > 1:
        _need_dir(args)
    kappa = config.closure if args.closed else None
    header = ["id"] + [f.name for f in config.factors] + ["value"]
    outputs = []
    for part in selected:
        parts = ([full_interactive(c) for c in cubes] if part == "int"
                 else [r[part] for r in results])
        text = render_csv(header, _long_rows(parts, kappa))
        target = None if args.out is None else (
            Path(args.out) / f"{part}.csv" if len(selected) > 1 or Path(args.out).is_dir()
            else Path(args.out))
        outputs.append((target, text))
    for target, text in outputs:
        if target is not None and target.exists() and not args.force:
            raise InputError(f"refusing to overwrite existing {target} (use --force)")
    for target, text in outputs:
        write_output(target, text, args.force)


def cmd_sample_stats(args):
    config, cubes = _load(args)
    _, mat = _matrix(args, config, cubes)
    if mat.n < 2:
        raise InputError(f"sample-stats needs at least 2 observations, got {mat.n}")
    B = args.bootstrap_B if args.bootstrap_B is not None else config.bootstrap_B
    alpha = args.alpha if args.alpha is not None else config.alpha
    seed = args.seed if args.seed is not None else config.seed
    try:
        ci = bootstrap_ci(mat, B=B, alpha=alpha, seed=seed)
    except ValueError as exc:
        raise InputError(str(exc)) from None
    rows = ([lab, float(m), float(s), float(lo), float(hi)]
            for lab, m, s, lo, hi in zip(ci.labels, ci.mean, ci.sd, ci.lower, ci.upper))
    write_output(args.out, render_csv(["key", "mean", "sd", "lower", "upper"], rows), args.force)


def cmd_pca(args):
    config, cubes = _load(args)
    if args.groups is None and config.pca_groups:
        args.groups = ",".join(config.pca_groups)
    _, mat = _matrix(args, config, cubes)
    if mat.n < 2:
        raise InputError(f"pca needs at least 2 observations, got {mat.n}")
    res = pca(mat)
    if res.degenerate:
        log.warning("input has zero variance; explained variance reported as 0")
    out = _need_dir(args)
    pcs = [f"PC{j + 1}" for j in range(len(res.eigenvalues))]
    files = {
        "loadings.csv": render_csv(["key"] + pcs, ([lab] + [float(v) for v in row]
                                                   for lab, row in zip(res.labels, res.loadings))),
        "scores.csv": render_csv(["id"] + pcs, ([oid or ""] + [float(v) for v in row]
                                                for oid, row in zip(res.ids, res.scores))),
        "variance.csv": render_csv(["component", "eigenvalue", "explained"],
                                   ([pc, float(ev), float(ex)] for pc, ev, ex
                                    in zip(pcs, res.eigenvalues, res.explained))),
    }
    for name in files:
        if (out / name).exists() and not args.force:
            raise InputError(f"refusing to overwrite existing {out / name} (use --force)")
    for name, text in files.items():
        write_output(out / name, text, args.force)


def cmd_contrast_matrix(args):
    config = load_config(args.config)
    if args.dims:
        try:
            dims = tuple(int(d) for d in args.dims.replace("x", ",").split(","))
        except ValueError:
            raise InputError(f"--dims must look like 2,2,3, got {args.dims!r}") from None
        expected = tuple(f.size for f in config.factors)
        if dims != expected:
            raise InputError(f"--dims {dims} does not match the configured levels {expected}")
    V = build_contrast_matrix(config.factors)
    rows = ([lab] + [float(v) for v in row] for lab, row in zip(V.labels, V.rows))
    write_output(args.out, render_csv(["key"] + cell_labels(config.factors), rows), args.force)
    if args.verify:
        dev = V.orthonormality_error()
        sums = float(np.abs(V.rows.sum(axis=1)).max())
        print(f"max |V V' - I| = {dev:.3e}; max |row sum| = {sums:.3e}", file=sys.stderr)


def _read_tmatrix(path, ncells):
    try:
        with open(path, encoding="utf-8-sig", newline="") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise InputError(f"cannot read T matrix {path}: {exc.strerror}") from None
    if len(rows) < 2:
        raise InputError(f"T matrix {path}: needs a header and at least one row")
    names, coef = [], []
    for line, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if len(row) != ncells + 1:
            raise InputError(f"line {line}: T row needs a name and {ncells} coefficients")
        try:
            coef.append([float(v) for v in row[1:]])
        except ValueError:
            raise InputError(f"line {line}: non-numeric T coefficient") from None
        names.append(row[0])
    return names, np.array(coef)


def cmd_transform(args):
    config, cubes = _load(args)
    V = build_contrast_matrix(config.factors)
    names, T = _read_tmatrix(args.tmatrix, V.rows.shape[1])
    out_rows = []
    for cube in cubes:
        try:
            vals = transform_logcontrasts(T, V, coords(cube, V))
        except ValueError as exc:
            raise InputError(f"T matrix: {exc}") from None
        out_rows.append([cube.obs_id or ""] + [float(v) for v in vals])
    write_output(args.out, render_csv(["id"] + names, out_rows), args.force)


def build_parser():
    parser = argparse.ArgumentParser(
        prog="compcube",
        description="Log-ratio coordinates, decomposition and statistics for compositional cubes.")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, func, help, data=True):
        p = sub.add_parser(name, help=help)
        if data:
            p.add_argument("--input", required=True, help="long-format CSV")
        p.add_argument("--config", required=True, help="JSON analysis configuration")
        p.add_argument("--out", help="output file or directory (default: stdout)")
        p.add_argument("--force", action="store_true", help="overwrite existing outputs")
        p.set_defaults(func=func)
        return p

    p = add("coords", cmd_coords, "coordinates per observation")
    p.add_argument("--no-norm", action="store_true", help="drop the normalizing constants")
    p.add_argument("--groups", help="comma-separated groups, e.g. rc,rcs or ind")

    p = add("decompose", cmd_decompose, "independence and interaction parts")
    p.add_argument("--part", default="all", help="ind, int, a subset label such as rc, or all")
    p.add_argument("--closed", action="store_true", help="close parts to the configured constant")

    p = add("sample-stats", cmd_sample_stats, "means, SDs and bootstrap CIs")
    p.add_argument("--no-norm", action="store_true")
    p.add_argument("--groups")
    p.add_argument("--bootstrap-B", type=int, dest="bootstrap_B")
    p.add_argument("--alpha", type=float)
    p.add_argument("--seed", type=int)

    p = add("pca", cmd_pca, "classical PCA on coordinates (writes into --out DIR)")
    p.add_argument("--no-norm", action="store_true")
    p.add_argument("--groups", help="coordinate groups to analyse, e.g. int")

    p = add("contrast-matrix", cmd_contrast_matrix, "export the contrast matrix", data=False)
    p.add_argument("--dims", help="expected level counts, e.g. 2,2,3")
    p.add_argument("--verify", action="store_true", help="report orthonormality deviation")

    p = add("transform", cmd_transform, "re-express coordinates as log-contrasts T V' z")
    p.add_argument("--tmatrix", required=True, help="CSV: name column plus one column per cell")
    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(name)s: %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args.func(args)
    except (InputError, CubeError) as exc:
        print(f"compcube {args.command}: error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
