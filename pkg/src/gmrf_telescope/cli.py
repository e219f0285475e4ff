"""Command-line entry point: ``gmrf-telescope [--out DIR] [--seed S] <subcommand> ...``.

Exit codes: 0 success, 1 validation or I/O failure (one line on stderr),
2 usage error.
"""

import argparse
import os
import sys

import numpy as np

from . import io, telescope, verify
from . import homotopy as hom
from .bessel import QuadratureError
from .errors import ModelError
from .estimation import denoise_image, estimate
from .lattice import DENSE_CAP, LatticeSpec, build_precision, validate_spd
from .sampling import sample_field
from .shells import shells

UINT64_MAX = 2 ** 64 - 1


def _seed(text):
    try:
        s = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"seed must be an integer, got {text!r}")
    if not 0 <= s <= UINT64_MAX:
        raise argparse.ArgumentTypeError("seed must be a 64-bit unsigned integer")
    return s


def _positive_int(text):
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text!r}")
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {v}")
    return v


def _load_model(path):
    spec, coeffs, cov = io.load_config(path)
    system = build_precision(spec, coeffs, cov)
    return system, telescope(system)


def _path(args, name):
    return os.path.join(args.out, name)


def cmd_shells(args):
    dec = shells(LatticeSpec(args.rows, args.cols))
    with open(_path(args, "shells.csv"), "w", newline="\n") as fh:
        fh.write("shell_index,order_in_shell,row,col\n")
        for k, ring in enumerate(dec.shells):
            for pos, (i, j) in enumerate(ring):
                fh.write(f"{k},{pos},{i},{j}\n")


def cmd_build(args):
    spec, coeffs, cov = io.load_config(args.model)
    if spec.n_interior > DENSE_CAP:
        raise ModelError(f"dense CSV output is capped at {DENSE_CAP} interior nodes")
    system = build_precision(spec, coeffs, cov)
    A, A_b = system.dense()
    io.write_csv(_path(args, "A.csv"), A)
    io.write_csv(_path(args, "A_b.csv"), A_b)
    io.write_csv(_path(args, "boundary_cov.csv"), system.boundary_cov)
    spd = validate_spd(system)
    io.write_report(_path(args, "build_report.txt"), [
        ("n_rows", spec.n_rows),
        ("n_cols", spec.n_cols),
        ("n_interior", spec.n_interior),
        ("n_boundary", spec.n_boundary),
        ("nnz_A", system.A.nnz),
        ("nnz_A_b", system.A_b.nnz),
        ("spd", "ok" if spd.ok else "fail"),
        ("min_pivot", spd.min_pivot),
        ("first_nonpositive_pivot", spd.failed_index),
    ])
    if not spd.ok:
        raise ModelError(f"A is not positive definite (pivot {spd.failed_index} fails)")


def cmd_factorize(args):
    _, (dec, _, model) = _load_model(args.model)
    for k in range(1, model.tau + 1):
        io.write_csv(_path(args, f"F_{k}.csv"), model.F[k])
        io.write_csv(_path(args, f"Q_{k}.csv"), model.Q[k])
    io.write_report(_path(args, "manifest.txt"), [
        ("n_rows", dec.n_rows),
        ("n_cols", dec.n_cols),
        ("tau", model.tau),
        ("stage_sizes", " ".join(str(s) for s in model.sizes)),
        ("files", " ".join(f"F_{k}.csv Q_{k}.csv" for k in range(1, model.tau + 1))),
    ])


def cmd_sample(args):
    _, (dec, _, model) = _load_model(args.model)
    if args.seed + args.count - 1 > UINT64_MAX:
        raise ModelError("seed + count - 1 exceeds the 64-bit seed range")
    width = len(str(args.count - 1))
    for i in range(args.count):
        seed = args.seed + i
        field = sample_field(model, dec, seed).interior
        stem = f"sample_{i:0{width}d}"
        if args.format == "csv":
            io.write_csv(_path(args, stem + ".csv"), field)
            continue
        lo, hi = float(field.min()), float(field.max())
        scale = (hi - lo) / 255.0 if hi > lo else 1.0
        io.write_pgm(_path(args, stem + ".pgm"), np.rint((field - lo) / scale))
        # value = offset + scale * pixel
        io.write_report(_path(args, stem + ".txt"), [
            ("seed", seed), ("offset", lo), ("scale", scale),
        ])


def cmd_estimate(args):
    system, (dec, _, model) = _load_model(args.model)
    obs, y, y_b = io.read_observations(args.obs, system.spec)
    res = estimate(model, dec, obs, y, y_b)
    prefix = _path(args, args.prefix)
    io.write_csv(prefix + "_mean.csv", res.interior_mean)
    io.write_csv(prefix + "_variance.csv", res.interior_variance)
    io.write_csv(prefix + "_boundary_mean.csv", res.boundary_mean[None, :])
    io.write_report(prefix + "_report.txt", [
        ("n_rows", dec.n_rows),
        ("n_cols", dec.n_cols),
        ("observed_interior", int(np.count_nonzero(obs.mask))),
        ("observed_boundary", int(np.count_nonzero(obs.boundary_mask)) if obs.boundary_mask is not None else 0),
        ("max_posterior_variance", float(np.max(res.interior_variance))),
    ])


def cmd_denoise(args):
    _, (dec, _, model) = _load_model(args.model)
    if not args.noise_var > 0:
        raise ModelError("--noise-var must be positive")
    image = io.read_pgm(args.input)
    if image.shape != (dec.n_rows, dec.n_cols):
        raise ModelError(
            f"image is {image.shape[0]}x{image.shape[1]}, model expects {dec.n_rows}x{dec.n_cols}"
        )
    ref = io.read_pgm(args.ref) if args.ref else None
    out, report = denoise_image(model, dec, image, args.noise_var, reference=ref)
    target = _path(args, args.output)
    io.write_pgm(target, out)
    io.write_report(os.path.splitext(target)[0] + "_report.txt", list(report.items()))


def cmd_verify(args):
    checks = verify.run_verification(args.seed)
    io.write_report(_path(args, "verify_report.txt"), verify.report_items(checks))
    failed = [c.name for c in checks if not c.passed]
    if failed:
        raise ModelError(f"{len(failed)} verification check(s) failed: {', '.join(failed)}")


def _surface_setup(args):
    n = args.samples
    if args.polygon:
        domain = hom.PlanarDomain(io.read_csv(args.polygon))
        if args.center is None:
            raise ModelError("--polygon needs --center")
        if not hom.check_star_center(domain, args.center):
            raise ModelError(f"center {tuple(args.center)} is not a star center of the polygon")
        return hom.affine(args.center, domain), domain
    domain = hom.PlanarDomain.regular(n)
    if args.kind == "radial":
        return hom.radial(), domain
    if args.kind == "shifted":
        c = args.center if args.center is not None else (0.0, 0.0)
        return hom.shifted_circles(*c), domain
    return hom.ellipse(lambda lam: 1.0 - lam, lambda lam: (1.0 - lam) ** 2), domain


def _svg(domain, surfs, size=480):
    lo, hi = domain.bounding_box()
    span = float(np.max(hi - lo)) or 1.0
    pad = 0.05 * span
    scale = size / (span + 2 * pad)

    def path(pts):
        xs = (pts[:, 0] - lo[0] + pad) * scale
        ys = size - (pts[:, 1] - lo[1] + pad) * scale
        cmds = [f"{'M' if i == 0 else 'L'}{x:.4f},{y:.4f}" for i, (x, y) in enumerate(zip(xs, ys))]
        return " ".join(cmds) + " Z"

    lines = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" '
        f'viewBox="0 0 {size} {size}">',
        f'<path d="{path(domain.vertices)}" fill="none" stroke="black" stroke-width="2"/>',
    ]
    for s in surfs:
        if np.ptp(s, axis=0).max() > 0:
            lines.append(f'<path d="{path(s)}" fill="none" stroke="steelblue" stroke-width="1"/>')
    lines.append("</svg>")
    return "\n".join(lines) + "\n"


def cmd_surfaces(args):
    h, domain = _surface_setup(args)
    lams = np.linspace(0.0, 1.0, args.levels + 1)
    surfs = [hom.surface(h, lam, args.samples) for lam in lams]
    with open(_path(args, "surfaces.csv"), "w", newline="\n") as fh:
        fh.write("level,lambda,index,x,y\n")
        for lev, (lam, pts) in enumerate(zip(lams, surfs)):
            for i, (x, y) in enumerate(pts):
                fh.write(f"{lev},{io.format_float(lam)},{i},{io.format_float(x)},{io.format_float(y)}\n")
    with open(_path(args, "surfaces.svg"), "w", newline="\n") as fh:
        fh.write(_svg(domain, surfs))
    rep = hom.validate_homotopy(h, domain, n_samples=args.samples, n_levels=args.levels, seed=args.seed)
    with open(_path(args, "surfaces_report.txt"), "w", newline="\n") as fh:
        fh.write(f"kind={h.kind}\n")
        for line in rep.lines():
            fh.write(line + "\n")


def build_parser():
    p = argparse.ArgumentParser(prog="gmrf-telescope", description=__doc__.splitlines()[0])
    p.add_argument("--out", default=".", metavar="DIR", help="output directory (default: .)")
    p.add_argument("--seed", type=_seed, default=0, metavar="S", help="64-bit unsigned seed (default: 0)")
    sub = p.add_subparsers(dest="command", metavar="SUBCOMMAND")
    sub.required = True

    s = sub.add_parser("shells", help="list shell membership as CSV")
    s.add_argument("--rows", type=_positive_int, required=True)
    s.add_argument("--cols", type=_positive_int, required=True)
    s.set_defaults(func=cmd_shells)

    s = sub.add_parser("build", help="write A, A_b and the boundary covariance")
    s.add_argument("--model", required=True)
    s.set_defaults(func=cmd_build)

    s = sub.add_parser("factorize", help="write F_k, Q_k and a manifest")
    s.add_argument("--model", required=True)
    s.set_defaults(func=cmd_factorize)

    s = sub.add_parser("sample", help="draw fields; sample i uses seed S + i")
    s.add_argument("--model", required=True)
    s.add_argument("--count", type=_positive_int, default=1)
    s.add_argument("--format", choices=("csv", "pgm"), default="csv")
    s.set_defaults(func=cmd_sample)

    s = sub.add_parser("estimate", help="posterior mean and variance from observations")
    s.add_argument("--model", required=True)
    s.add_argument("--obs", required=True, help="CSV rows: row, col, gain, variance, value")
    s.add_argument("--out", dest="prefix", default="estimate", metavar="PREFIX",
                   help="output prefix inside DIR (default: estimate)")
    s.set_defaults(func=cmd_estimate)

    s = sub.add_parser("denoise", help="posterior-mean denoising of a PGM image")
    s.add_argument("--model", required=True)
    s.add_argument("--in", dest="input", required=True, metavar="IMAGE")
    s.add_argument("--noise-var", type=float, required=True)
    s.add_argument("--ref", default=None, metavar="CLEAN")
    s.add_argument("--out", dest="output", default="denoised.pgm", metavar="IMAGE")
    s.set_defaults(func=cmd_denoise)

    s = sub.add_parser("verify", help="run the continuous-index verification suite")
    s.set_defaults(func=cmd_verify)

    s = sub.add_parser("surfaces", help="sample telescoping surfaces and check P1-P4")
    s.add_argument("--kind", choices=("radial", "shifted", "ellipse"), default="radial")
    s.add_argument("--center", type=float, nargs=2, default=None, metavar=("X", "Y"))
    s.add_argument("--polygon", default=None, help="CSV of polygon vertices (affine homotopy)")
    s.add_argument("--levels", type=_positive_int, default=16)
    s.add_argument("--samples", type=_positive_int, default=256)
    s.set_defaults(func=cmd_surfaces)
    return p


def run(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else 0
    try:
        os.makedirs(args.out, exist_ok=True)
        args.func(args)
    except (ModelError, ValueError, OSError, QuadratureError) as exc:
        msg = str(exc).strip().splitlines()
        print(f"gmrf-telescope {args.command}: error: {msg[0] if msg else type(exc).__name__}",
              file=sys.stderr)
        return 1
    return 0


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
