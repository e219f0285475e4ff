"""File formats: CSV matrices, PGM images, TOML model configs, key=value reports."""

import os
import sys

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .errors import ModelError
from .lattice import OFFSETS, LatticeSpec, NeighborhoodCoefficients


def format_float(x):
    return format(float(x), ".17g")


def write_csv(path, matrix):
    """One row per line, comma separated, ``%.17g`` so values round-trip exactly."""
    m = np.atleast_2d(np.asarray(matrix, dtype=float))
    with open(path, "w", newline="\n") as fh:
        for row in m:
            fh.write(",".join(format_float(v) for v in row))
            fh.write("\n")


def read_csv(path):
    try:
        data = np.loadtxt(path, delimiter=",", ndmin=2, dtype=float)
    except ValueError as exc:
        raise ModelError(f"{path}: not a numeric CSV matrix ({exc})") from exc
    return data


def write_report(path, items):
    with open(path, "w", newline="\n") as fh:
        for key, value in items:
            if isinstance(value, (float, np.floating)):
                value = format_float(value)
            fh.write(f"{key}={value}\n")


def read_report(path):
    out = {}
    with open(path) as fh:
        for line in fh:
            line = line.rstrip("\n")
            if line and "=" in line:
                k, v = line.split("=", 1)
                out[k] = v
    return out


def _pgm_tokens(data, count, pos):
    tokens = []
    while len(tokens) < count:
        while pos < len(data) and data[pos:pos + 1].isspace():
            pos += 1
        if data[pos:pos + 1] == b"#":
            while pos < len(data) and data[pos:pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos:pos + 1].isspace() and data[pos:pos + 1] != b"#":
            pos += 1
        if start == pos:
            raise ModelError("truncated PGM header")
        tokens.append(data[start:pos])
    return tokens, pos


def read_pgm(path):
    """8-bit grayscale PGM, binary (P5) or ASCII (P2)."""
    with open(path, "rb") as fh:
        data = fh.read()
    magic = data[:2]
    if magic not in (b"P5", b"P2"):
        raise ModelError(f"{path}: not a P5/P2 PGM file")
    (w, h, maxval), pos = _pgm_tokens(data, 3, 2)
    w, h, maxval = int(w), int(h), int(maxval)
    if not 0 < maxval <= 255:
        raise ModelError(f"{path}: only 8-bit PGM is supported (maxval={maxval})")
    if magic == b"P5":
        pos += 1  # single whitespace after maxval
        pix = np.frombuffer(data[pos:pos + w * h], dtype=np.uint8)
        if pix.size != w * h:
            raise ModelError(f"{path}: truncated pixel data")
    else:
        vals, _ = _pgm_tokens(data, w * h, pos)
        pix = np.array([int(v) for v in vals], dtype=np.uint8)
    return pix.reshape(h, w).copy()


def write_pgm(path, image):
    img = np.asarray(image)
    if img.ndim != 2:
        raise ValueError("PGM images are two-dimensional")
    img = np.clip(img, 0, 255).astype(np.uint8)
    h, w = img.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{w} {h}\n255\n".encode("ascii"))
        fh.write(img.tobytes())


def load_config(path):
    """Parse a model config; returns ``(spec, coeffs, boundary_cov)``.

    Keys: ``n_rows``, ``n_cols``, ``alpha`` (number or CSV path),
    ``beta.<n|ne|e|se|s|sw|w|nw>`` (numbers, missing = 0), ``boundary_cov``
    (``"identity:<variance>"`` or CSV path). Relative paths resolve against
    the config's directory.
    """
    try:
        with open(path, "rb") as fh:
            cfg = tomllib.load(fh)
    except tomllib.TOMLDecodeError as exc:
        raise ModelError(f"{path}: malformed config ({exc})") from exc
    base = os.path.dirname(os.path.abspath(path))

    for key in ("n_rows", "n_cols"):
        if key not in cfg:
            raise ModelError(f"{path}: missing key {key}")
    spec = LatticeSpec(cfg["n_rows"], cfg["n_cols"])
    shape = (spec.n_rows, spec.n_cols)

    alpha = cfg.get("alpha")
    if alpha is None:
        raise ModelError(f"{path}: missing key alpha")
    if isinstance(alpha, str):
        alpha = read_csv(os.path.join(base, alpha))
        if alpha.shape != shape:
            raise ModelError(f"alpha CSV is {alpha.shape}, expected {shape}")
    else:
        alpha = np.full(shape, float(alpha))

    beta_cfg = cfg.get("beta", {})
    if not isinstance(beta_cfg, dict):
        raise ModelError(f"{path}: beta must be a table of offsets")
    beta = {}
    for name, value in beta_cfg.items():
        if name not in OFFSETS:
            raise ModelError(f"{path}: unknown beta offset {name!r}")
        beta[OFFSETS[name]] = np.full(shape, float(value))
    coeffs = NeighborhoodCoefficients(alpha, beta, homogeneous=np.ptp(alpha) == 0)

    bc = cfg.get("boundary_cov", "identity:1")
    if not isinstance(bc, str):
        raise ModelError(f"{path}: boundary_cov must be a string")
    if bc.startswith("identity:"):
        try:
            var = float(bc.split(":", 1)[1])
        except ValueError as exc:
            raise ModelError(f"{path}: bad boundary_cov {bc!r}") from exc
        cov = var * np.eye(spec.n_boundary)
    else:
        cov = read_csv(os.path.join(base, bc))
    return spec, coeffs, cov


def write_config(path, n_rows, n_cols, alpha, beta, boundary_cov="identity:1"):
    """Write a homogeneous model config (scalar alpha, scalar beta per offset)."""
    lines = [f"n_rows = {int(n_rows)}", f"n_cols = {int(n_cols)}"]
    lines.append(f'alpha = "{alpha}"' if isinstance(alpha, str) else f"alpha = {format_float(alpha)}")
    lines.append(f'boundary_cov = "{boundary_cov}"')
    lines.append("")
    lines.append("[beta]")
    for name, value in beta.items():
        lines.append(f"{name} = {format_float(value)}")
    with open(path, "w", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def read_observations(path, spec):
    """Observation CSV ``row, col, gain, variance, value`` (1-based interior
    coordinates; ring nodes such as row 0 address the boundary). A header
    line is allowed."""
    from .estimation import ObservationModel

    shape = (spec.n_rows, spec.n_cols)
    gain, var, y = np.zeros(shape), np.ones(shape), np.zeros(shape)
    mask = np.zeros(shape, dtype=bool)
    bindex = {node: k for k, node in enumerate(spec.boundary_nodes())}
    nb = spec.n_boundary
    bgain, bvar, by = np.zeros(nb), np.ones(nb), np.zeros(nb)
    bmask = np.zeros(nb, dtype=bool)

    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            parts = [p.strip() for p in line.split(",")]
            if len(parts) != 5:
                raise ModelError(f"{path}:{lineno}: expected 5 columns")
            try:
                i, j = int(parts[0]), int(parts[1])
                g, r, v = (float(p) for p in parts[2:])
            except ValueError:
                if lineno == 1:
                    continue  # header
                raise ModelError(f"{path}:{lineno}: malformed observation")
            if spec.is_interior(i, j):
                gain[i - 1, j - 1], var[i - 1, j - 1], y[i - 1, j - 1] = g, r, v
                mask[i - 1, j - 1] = True
            elif (i, j) in bindex:
                k = bindex[(i, j)]
                bgain[k], bvar[k], by[k], bmask[k] = g, r, v, True
            else:
                raise ModelError(f"{path}:{lineno}: node ({i}, {j}) is off the lattice")
    if bmask.any():
        obs = ObservationModel(gain, var, mask, bgain, bvar, bmask)
        return obs, y, by
    return ObservationModel(gain, var, mask), y, None
