"""Command-line entry point.

Every subcommand writes its artifacts plus one ``<command>_manifest.json``
into the output directory (``--out-dir``, else $CYCLIC_INTERFEROMETER_OUT,
else the working directory).  Exit codes: 0 success, 2 bad input,
3 fit or calibration failure.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import time
import warnings
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import (
    FringeDataset,
    OverlapSet,
    bootstrap_bounds,
    c1_bounds,
    fit_visibility,
    hom_indistinguishability,
    unmeasured_overlap_bounds,
)
from .circuit import CircuitSpec, build_unitary, collapse_phases, write_unitary_csv
from .errors import FitError, InputError
from .fock import from_modes, odd_modes, parse_state
from .interference import (
    Mixture,
    fringe_outputs,
    prob_distinguishable,
    prob_indistinguishable,
    prob_partial,
    scan_fringe,
)
from .noise import TOGGLES, NoiseConfig, predict
from .permanent import bench

OUT_DIR_ENV = "CYCLIC_INTERFEROMETER_OUT"
EXIT_INPUT = 2
EXIT_FIT = 3


@dataclass
class RunManifest:
    command: str
    config: dict
    seed: int
    version: str = __version__
    outputs: list = field(default_factory=list)
    duration_s: float = 0.0

    def write(self, out_dir: Path) -> Path:
        path = out_dir / f"{self.command}_manifest.json"
        _write_json(path, asdict(self))
        return path


def _write_json(path: Path, payload) -> None:
    # repr-based floats round-trip exactly, so reruns are byte-identical
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8", newline="\n")


def _floats(text: str) -> list[float]:
    try:
        return [float(tok) for tok in text.split(",") if tok.strip()]
    except ValueError as exc:
        raise InputError(f"expected comma-separated numbers, got {text!r}") from exc


def parse_alpha_grid(text: str) -> np.ndarray:
    """``start:stop:count`` in radians, endpoint included."""
    parts = text.split(":")
    if len(parts) != 3:
        raise InputError(f"alpha grid must be start:stop:count, got {text!r}")
    try:
        start, stop, count = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError as exc:
        raise InputError(f"bad alpha grid {text!r}") from exc
    if count < 1:
        raise InputError("alpha grid needs at least one point")
    return np.linspace(start, stop, count)


def _load_spec(args) -> CircuitSpec:
    if args.spec:
        return CircuitSpec.load(args.spec)
    return CircuitSpec(args.n)


def _model(args, k: int):
    if args.mixture is None:
        return None
    weights = _floats(args.mixture)
    if len(weights) != k:
        raise InputError(f"--mixture needs {k} weights, got {len(weights)}")
    return Mixture(tuple(weights))


# ------------------------------------------------------------ subcommands


def cmd_build(args, out: Path, log) -> tuple[dict, list[str]]:
    spec = _load_spec(args)
    alpha, _ = collapse_phases(spec)
    path = out / "unitary.csv"
    write_unitary_csv(build_unitary(spec), path)
    log(f"alpha1 = {alpha:.17g}")
    return spec.to_dict(), [str(path)]


def cmd_prob(args, out: Path, log):
    spec = _load_spec(args)
    g, h = parse_state(args.input), parse_state(args.output)
    if g.n_photons != h.n_photons:
        raise InputError(f"input has {g.n_photons} photons, output has {h.n_photons}")
    u = build_unitary(spec)
    if args.dist:
        model, value = "distinguishable", prob_distinguishable(u, g, h)
    elif args.mixture is not None:
        model, value = "mixture", prob_partial(u, g, h, _model(args, g.n_photons))
    else:
        model, value = "indistinguishable", prob_indistinguishable(u, g, h)
    log(f"{value:.17g}")
    path = out / "prob.json"
    _write_json(path, {"input": str(g), "output": str(h), "model": model, "probability": value})
    return {"circuit": spec.to_dict(), "input": str(g), "output": str(h), "model": model,
            "mixture": args.mixture}, [str(path)]


def cmd_fringe(args, out: Path, log):
    spec = _load_spec(args)
    if args.input:
        g = parse_state(args.input)
    else:
        photons = spec.n if args.photons is None else args.photons
        if not 1 <= photons <= spec.n:
            raise InputError(f"--photons must lie in 1..{spec.n}")
        g = from_modes(odd_modes(photons), spec.n_modes)
    if g.n_modes != spec.n_modes:
        raise InputError(f"input lives on {g.n_modes} modes, circuit has {spec.n_modes}")
    plus, minus = fringe_outputs(g)
    outputs = plus + minus
    if not outputs:
        # fewer than n photons: no output has a fringe, scan every collision-free one
        from .fock import enumerate_states

        outputs = enumerate_states(spec.n_modes, g.n_photons, collision_free=True)
    alphas = parse_alpha_grid(args.alphas)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        data = scan_fringe(spec, g, outputs, alphas, _model(args, g.n_photons))
    for w in caught:
        print(f"warning: {w.message}", file=sys.stderr)
    path = out / "fringe.csv"
    data.write_scan_csv(path)
    log(f"{len(plus)} plus and {len(minus)} minus outputs, {len(alphas)} phases -> {path}")
    return {"circuit": spec.to_dict(), "input": str(g), "alphas": args.alphas,
            "mixture": args.mixture}, [str(path)]


def cmd_noise(args, out: Path, log):
    config = NoiseConfig.load(args.config)
    if args.toggles is None:
        toggles = config.toggles
    elif args.toggles.strip() in ("", "none"):
        toggles = frozenset()
    else:
        toggles = frozenset(tok.strip() for tok in args.toggles.split(","))
    alphas = parse_alpha_grid(args.alphas)
    data, fit = predict(config, toggles, alphas)
    csv_path = out / "noise_fringe.csv"
    json_path = out / "noise_summary.json"
    data.write_scan_csv(csv_path)
    _write_json(json_path, {"c1_mod": fit.c1, "fit_error": fit.c1_err})
    log(f"c1_mod = {fit.c1:.6f} +- {fit.c1_err:.2g} (toggles: {', '.join(sorted(toggles)) or 'none'})")
    resolved = config.to_dict()
    resolved["toggles"] = sorted(toggles)
    return {"noise": resolved, "alphas": args.alphas}, [str(csv_path), str(json_path)]


def cmd_fit(args, out: Path, log):
    data = FringeDataset.read_csv(args.data)
    calibration = None
    if args.slope is not None:
        calibration = (args.slope, args.offset)
    result = fit_visibility(data, calibration)
    payload = {"c1": result.c1, "c1_err": result.c1_err, "amplitude_plus": result.amplitudes[0],
               "amplitude_minus": result.amplitudes[1], "chi2": result.chi2,
               "slope": result.slope, "offset": result.offset}
    path = out / "fit.json"
    _write_json(path, payload)
    log(f"c1 = {result.c1:.6f} +- {result.c1_err:.6f}")
    return {"data": str(args.data), "slope": args.slope, "offset": args.offset}, [str(path)]


def cmd_bounds(args, out: Path, log):
    if (args.overlaps is None) == (args.visibilities is None):
        raise InputError("give exactly one of --overlaps or --visibilities")
    errors = _floats(args.errors) if args.errors else [0.0] * 4
    if args.visibilities is not None:
        values = [hom_indistinguishability(v, args.g2) for v in _floats(args.visibilities)]
        errors = [e / (1.0 - args.g2) for e in errors]
    else:
        values = _floats(args.overlaps)
    if len(values) != 4 or len(errors) != 4:
        raise InputError("need four overlaps (AB, BC, CD, DA) and four errors")
    overlaps = OverlapSet(*values, *errors)
    point = c1_bounds(overlaps)
    (ac_lo, ac_hi), (bd_lo, bd_hi) = unmeasured_overlap_bounds(*values[:3])
    payload = {"overlaps": values, "errors": errors, "lower": point.lower, "upper": point.upper,
               "consistent": point.consistent, "m_ac": [ac_lo, ac_hi], "m_bd": [bd_lo, bd_hi]}
    if args.bootstrap:
        boot = bootstrap_bounds(overlaps, iterations=args.bootstrap, seed=args.seed)
        payload["bootstrap"] = {"iterations": args.bootstrap, "lower": boot.lower, "upper": boot.upper}
        log(f"bootstrap: {boot.lower:.4f} <= c1 <= {boot.upper:.4f}")
    log(f"{point.lower:.4f} <= c1 <= {point.upper:.4f}")
    path = out / "bounds.json"
    _write_json(path, payload)
    return {"overlaps": values, "errors": errors, "bootstrap": args.bootstrap}, [str(path)]


def cmd_bench(args, out: Path, log):
    ks = [int(v) for v in _floats(args.k)]
    if any(k < 1 for k in ks):
        raise InputError("matrix sizes must be positive")
    rows = bench(ks, rng=args.seed, repeats=args.repeats)
    path = out / "bench_permanent.csv"
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("k,seconds\n")
        for k, seconds in rows:
            fh.write(f"{k},{seconds:.17g}\n")
            log(f"k={k:2d}  {seconds:.4g} s")
    return {"k": ks, "repeats": args.repeats}, [str(path)]


# ------------------------------------------------------------------ parser


def _add_circuit_args(p):
    p.add_argument("--spec", help="circuit JSON {n, phases, transmissivities}")
    p.add_argument("--n", type=int, default=4, help="ideal circuit size when no --spec is given")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cyclic-interferometer", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--out-dir", type=Path, default=None)
    parser.add_argument("--quiet", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("build", help="write the circuit unitary and report alpha1")
    _add_circuit_args(p)
    p.set_defaults(func=cmd_build)

    p = sub.add_parser("prob", help="single transition probability")
    _add_circuit_args(p)
    p.add_argument("--input", required=True, help='occupations "1,0,1,0" or mode list "[1,3]@4"')
    p.add_argument("--output", required=True)
    group = p.add_mutually_exclusive_group()
    group.add_argument("--indist", action="store_true", help="identical photons (default)")
    group.add_argument("--dist", action="store_true", help="fully distinguishable photons")
    group.add_argument("--mixture", metavar="X1,X2,...", help="per-photon mixture weights")
    p.set_defaults(func=cmd_prob)

    p = sub.add_parser("fringe", help="plus/minus traces over a phase grid")
    _add_circuit_args(p)
    p.add_argument("--input", help="input state; default one photon per odd mode")
    p.add_argument("--photons", type=int, help="use the first k odd modes as input")
    p.add_argument("--alphas", default=f"0:{2 * math.pi!r}:24", help="start:stop:count in radians")
    p.add_argument("--mixture", metavar="X1,X2,...")
    p.set_defaults(func=cmd_fringe)

    p = sub.add_parser("noise", help="simulate the imperfect experiment and fit c1")
    p.add_argument("--config", required=True, help="noise JSON")
    p.add_argument("--alphas", default=f"0:{2 * math.pi * 23 / 24!r}:24")
    p.add_argument("--toggles", help=f"comma list from {','.join(TOGGLES)}, or 'none'")
    p.set_defaults(func=cmd_noise)

    p = sub.add_parser("fit", help="fit the shared visibility of a fringe CSV")
    p.add_argument("--data", required=True)
    p.add_argument("--slope", type=float, help="known phase per milliwatt")
    p.add_argument("--offset", type=float, default=0.0)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("bounds", help="bounds on c1 from the four neighbour overlaps")
    p.add_argument("--overlaps", metavar="AB,BC,CD,DA")
    p.add_argument("--visibilities", metavar="AB,BC,CD,DA", help="raw HOM visibilities, corrected with --g2")
    p.add_argument("--g2", type=float, default=0.0)
    p.add_argument("--errors", metavar="AB,BC,CD,DA")
    p.add_argument("--bootstrap", type=int, default=0, metavar="N")
    p.set_defaults(func=cmd_bounds)

    p = sub.add_parser("bench-permanent", help="time the permanent against matrix size")
    p.add_argument("--k", default="10,12,14,16,18,20")
    p.add_argument("--repeats", type=int, default=1)
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    out = args.out_dir or Path(os.environ.get(OUT_DIR_ENV, "."))
    log = (lambda msg: None) if args.quiet else print
    start = time.perf_counter()
    try:
        out.mkdir(parents=True, exist_ok=True)
        config, outputs = args.func(args, out, log)
    except FitError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FIT
    except (InputError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    manifest = RunManifest(args.command, config, args.seed, outputs=outputs,
                           duration_s=time.perf_counter() - start)
    manifest.write(out)
    return 0


if __name__ == "__main__":
    sys.exit(main())
