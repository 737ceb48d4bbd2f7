"""Preprocessing and serving command line.

Everything expensive (sensitivity volumes, curve construction) happens here,
ahead of the interactive session; the serve command only reads the artifacts
back and answers view-data requests.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

import numpy as np

from .ensemble import (
    Ensemble,
    GridDims,
    SYNTHETIC_PARAMS,
    SyntheticConfig,
    generate_synthetic,
    load_ensemble,
    random_sample,
    saltelli_sample,
    write_ensemble,
)
from .errors import SensVolError
from .evaluation import (
    coherency_report,
    convergence_from_ensembles,
    timing_harness,
    write_coherency_csv,
    write_report,
)
from .sensitivity import (
    DeltaConfig,
    DgsaConfig,
    delta_volume,
    dgsa_volume,
    load_field_set,
    sobol_volume,
    write_field_set,
)
from .service import CURVES_SUBDIR, SENSITIVITY_SUBDIR, MEASURE_PREFERENCE
from .sfc import (
    SfcConfig,
    data_driven_curve,
    hilbert_curve,
    load_curve,
    scanline_curve,
    write_curve,
)

N_SYNTHETIC_BLOCKS = len(SYNTHETIC_PARAMS) + 2  # A, B, and one block per parameter


def _parse_dims(values: list[int]) -> GridDims:
    if len(values) == 1:
        return GridDims(values[0], values[0], values[0])
    if len(values) == 3:
        return GridDims(*values)
    raise argparse.ArgumentTypeError("--dims takes one value (cube) or three")


def cmd_generate_synthetic(args) -> int:
    dims = _parse_dims(args.dims)
    if args.layout == "saltelli":
        if args.runs % N_SYNTHETIC_BLOCKS:
            raise SensVolError(
                f"--runs must be a multiple of {N_SYNTHETIC_BLOCKS} for the "
                f"saltelli layout (A, B, and one block per parameter)"
            )
        samples = saltelli_sample(
            SYNTHETIC_PARAMS, args.runs // N_SYNTHETIC_BLOCKS, seed=args.seed
        )
    else:
        samples = random_sample(SYNTHETIC_PARAMS, args.runs, seed=args.seed)
    cfg = SyntheticConfig(
        dims=dims, run_count=args.runs, noise_max=args.noise_max, seed=args.seed
    )
    ens = generate_synthetic(cfg, samples)
    manifest = write_ensemble(ens, args.out)
    print(f"wrote {ens.n_runs} runs of {dims.nx}x{dims.ny}x{dims.nz} to {manifest}")
    return 0


def cmd_sensitivity(args) -> int:
    ens = load_ensemble(args.data)
    out = Path(args.out) if args.out else Path(args.data) / SENSITIVITY_SUBDIR / args.measure
    if args.measure == "sobol":
        fs = sobol_volume(ens, base_n=args.base_n)
    elif args.measure == "delta":
        fs = delta_volume(ens, DeltaConfig(slice_count=args.slices))
    else:
        fs = dgsa_volume(
            ens,
            DgsaConfig(
                bootstrap_b=args.bootstrap_b,
                seed=args.seed,
                rank_space=args.rank_space,
            ),
        )
    meta = write_field_set(fs, out)
    print(f"wrote {fs.measure} fields for {fs.n_params} parameters to {meta.parent}")
    return 0


def cmd_sfc(args) -> int:
    data = Path(args.data)
    ens = load_ensemble(data)
    if args.kind == "hilbert":
        curve = hilbert_curve(ens.dims)
    elif args.kind == "scanline":
        curve = scanline_curve(ens.dims)
    else:
        fields_dir = args.fields
        if fields_dir is None:
            for m in MEASURE_PREFERENCE:
                cand = data / SENSITIVITY_SUBDIR / m
                if (cand / "sensitivity.json").is_file():
                    fields_dir = cand
                    break
        if fields_dir is None:
            raise SensVolError(
                "data-driven curve needs a sensitivity field set; run the "
                "sensitivity command first or pass --fields"
            )
        fields = load_field_set(fields_dir)
        cfg = SfcConfig(
            alpha=args.alpha, distance=args.distance, ref_point=tuple(args.ref)
        )
        curve = data_driven_curve(fields, cfg)
    if args.out:
        out = Path(args.out)
    else:
        name = (
            f"{args.kind}_{args.distance}.sfc"
            if args.kind == "datadriven"
            else f"{args.kind}.sfc"
        )
        out = data / CURVES_SUBDIR / name
    out.parent.mkdir(parents=True, exist_ok=True)
    write_curve(curve, out)
    print(f"wrote {curve.kind} curve over {curve.order.size} voxels to {out}")
    return 0


def cmd_resample(args) -> int:
    from scipy.ndimage import map_coordinates

    ens = load_ensemble(args.data)
    dst = _parse_dims(args.dims)
    src = ens.dims

    # cell-centered trilinear sampling of the source lattice
    def axis_coords(n_dst, n_src):
        return (np.arange(n_dst) + 0.5) * (n_src / n_dst) - 0.5

    zc = axis_coords(dst.nz, src.nz)
    yc = axis_coords(dst.ny, src.ny)
    xc = axis_coords(dst.nx, src.nx)
    Z, Y, X = np.meshgrid(zc, yc, xc, indexing="ij")
    coords = np.array([Z.ravel(), Y.ravel(), X.ravel()])

    def resample_field(flat):
        grid = flat.astype(np.float64).reshape(src.nz, src.ny, src.nx)
        return map_coordinates(grid, coords, order=1, mode="nearest").astype(
            np.float32
        )

    vols = np.stack([resample_field(v) for v in ens.volumes])
    aux = {name: resample_field(arr) for name, arr in ens.aux.items()}
    out_ens = Ensemble(
        dims=dst, pspace=ens.pspace, volumes=vols, aux=aux, name=ens.name
    )
    manifest = write_ensemble(out_ens, args.out)
    print(
        f"resampled {src.nx}x{src.ny}x{src.nz} -> {dst.nx}x{dst.ny}x{dst.nz}, "
        f"wrote {manifest}"
    )
    return 0


def cmd_evaluate(args) -> int:
    fields = load_field_set(args.fields)
    reports = {}
    for cf in args.curves:
        curve = load_curve(cf)
        label = Path(cf).stem
        reports[label] = coherency_report(
            curve, fields, ref_point=tuple(args.ref), max_lag=args.max_lag
        )
    out = write_report(args.out, coherency=reports)
    if args.csv:
        write_coherency_csv(args.csv, reports)
    for label, rep in reports.items():
        print(
            f"{label}: value coherency {rep.value_coherency:.4f}, "
            f"positional coherency {rep.positional_coherency:.4f}"
        )
    print(f"wrote {out}")
    return 0


def cmd_convergence(args) -> int:
    dims = _parse_dims(args.dims)
    ensembles = []
    for target in args.targets:
        base_n = max(2, round(target / N_SYNTHETIC_BLOCKS))
        samples = saltelli_sample(SYNTHETIC_PARAMS, base_n, seed=args.seed)
        cfg = SyntheticConfig(
            dims=dims,
            run_count=samples.n_runs,
            noise_max=args.noise_max,
            seed=args.seed,
        )
        ensembles.append(generate_synthetic(cfg, samples))
    compute = {
        "sobol": sobol_volume,
        "delta": lambda e: delta_volume(e),
        "dgsa": lambda e: dgsa_volume(e),
    }
    for measure in args.measures:
        rep = convergence_from_ensembles(ensembles, compute[measure], measure)
        out = Path(args.out)
        path = (
            out
            if len(args.measures) == 1
            else out.with_name(f"{out.stem}_{measure}{out.suffix}")
        )
        write_report(path, convergence=rep)
        for s in rep.steps:
            print(
                f"{measure}: {s.prev_run_count} -> {s.run_count} runs, "
                f"mean |diff| {s.mean_abs_diff:.5f}"
            )
        print(f"wrote {path}")
    if args.timings:
        rows = timing_harness(ensembles, {m: compute[m] for m in args.measures})
        write_report(args.timings, timings=rows)
        print(f"wrote {args.timings}")
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    app = create_app(
        args.data, measure=args.measure, curve_file=args.curve, ui_dir=args.ui
    )
    if app.state.dataset is None:
        print(
            f"warning: dataset not preprocessed ({app.state.problem}); "
            "API will answer 409",
            file=sys.stderr,
        )
    port = int(os.environ.get("SENSVOL_PORT", args.port))
    uvicorn.run(app, host=args.host, port=port)
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="sensvol",
        description="Spatial sensitivity volumes, space-filling curves, and "
        "the explorer service",
    )
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate-synthetic", help="write the synthetic ensemble")
    g.add_argument("--out", required=True)
    g.add_argument("--dims", type=int, nargs="+", default=[32])
    g.add_argument("--runs", type=int, default=4096)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--noise-max", type=float, default=0.01)
    g.add_argument("--layout", choices=("saltelli", "random"), default="saltelli")
    g.set_defaults(func=cmd_generate_synthetic)

    s = sub.add_parser("sensitivity", help="compute a sensitivity field set")
    s.add_argument("--data", required=True)
    s.add_argument("--measure", choices=("sobol", "delta", "dgsa"), required=True)
    s.add_argument("--out")
    s.add_argument("--base-n", type=int, default=None,
                   help="declare the A/B block size when the manifest lacks it")
    s.add_argument("--slices", type=int, default=None)
    s.add_argument("--bootstrap-b", type=int, default=1000)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--rank-space", action="store_true")
    s.set_defaults(func=cmd_sensitivity)

    c = sub.add_parser("sfc", help="construct and persist a space-filling curve")
    c.add_argument("--data", required=True)
    c.add_argument("--kind", choices=("datadriven", "hilbert", "scanline"),
                   default="datadriven")
    c.add_argument("--distance", choices=("l1", "l2", "linf", "ssd", "cosine"),
                   default="l1")
    c.add_argument("--alpha", type=float, default=0.1)
    c.add_argument("--ref", type=float, nargs=3, default=[0.0, 0.0, 0.0])
    c.add_argument("--fields", help="sensitivity directory for the data-driven kind")
    c.add_argument("--out")
    c.set_defaults(func=cmd_sfc)

    r = sub.add_parser("resample", help="trilinear resampling to new dims")
    r.add_argument("--data", required=True)
    r.add_argument("--dims", type=int, nargs="+", required=True)
    r.add_argument("--out", required=True)
    r.set_defaults(func=cmd_resample)

    e = sub.add_parser("evaluate", help="coherency metrics for curves")
    e.add_argument("--fields", required=True)
    e.add_argument("--curves", nargs="+", required=True)
    e.add_argument("--max-lag", type=int, default=100)
    e.add_argument("--ref", type=float, nargs=3, default=[0.0, 0.0, 0.0])
    e.add_argument("--out", default="report.json")
    e.add_argument("--csv")
    e.set_defaults(func=cmd_evaluate)

    v = sub.add_parser("convergence", help="synthetic convergence study")
    v.add_argument("--dims", type=int, nargs="+", default=[16])
    v.add_argument("--targets", type=int, nargs="+",
                   default=[16, 32, 64, 128, 256, 512, 1024, 2048, 4096])
    v.add_argument("--measures", nargs="+", choices=("sobol", "delta", "dgsa"),
                   default=["sobol"])
    v.add_argument("--seed", type=int, default=0)
    v.add_argument("--noise-max", type=float, default=0.01)
    v.add_argument("--out", default="convergence.json")
    v.add_argument("--timings", help="also write a timing report to this path")
    v.set_defaults(func=cmd_convergence)

    sv = sub.add_parser("serve", help="serve the explorer API")
    sv.add_argument("--data", required=True)
    sv.add_argument("--port", type=int, default=8000)
    sv.add_argument("--host", default="127.0.0.1")
    sv.add_argument("--measure", choices=("sobol", "delta", "dgsa"))
    sv.add_argument("--curve", help="curve file (defaults to the dataset's)")
    sv.add_argument("--ui", help="static UI directory to mount at /")
    sv.set_defaults(func=cmd_serve)

    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except SensVolError as e:
        print(f"error: {type(e).__name__}: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
