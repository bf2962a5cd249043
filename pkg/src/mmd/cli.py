"""Command-line driver.

Subcommands: generate, decompose, approximate, converge, bench, whiteness,
oracle.  Exit codes: 0 ok, 2 argument parsing, 3 input validation, 4 solver
failure, 5 I/O failure.
"""

from __future__ import annotations

import argparse
import os
import sys
import time
from pathlib import Path
from typing import Dict, List, Optional, Sequence

import numpy as np

from . import fileio
from .dsa import DsaRequest, effective_fundamental, extract_single, phase_span, run_dsa
from .errors import SolverError, ValidationError
from .model import (
    ConvergenceTrace,
    DecompositionResult,
    MimfExpansion,
    PhaseTrack,
    ShapeTable,
    StopReason,
    UniformSignal,
    banded_approximation,
    residual_operator,
    signal_norm,
)
from .oracle import rdbr_extract
from .rdsa import RdsaConfig, convergence_eta, rdsa1, rdsa2, scale_set_for
from .siggen import ShapeSpec, add_noise, gen_ex2, gen_ex3, gen_shape

EXIT_OK = 0
EXIT_PARSE = 2
EXIT_VALIDATION = 3
EXIT_SOLVER = 4
EXIT_IO = 5


# ---------------------------------------------------------------------------
# shared loading helpers

def _require_file(path: str) -> Path:
    p = Path(path)
    if not p.is_file():
        raise ValidationError(f"input file not found: {p}")
    return p


def load_signal(path: str) -> UniformSignal:
    return UniformSignal(fileio.read_samples(_require_file(path)))


def load_phase(path: str) -> PhaseTrack:
    values = fileio.read_samples(_require_file(path))
    if values.size < 3:
        raise ValidationError(f"{path}: phase file too short")
    span = float(values[-1] - values[0] + (values[-1] - values[-2]))
    if span <= 0:
        raise ValidationError(f"{path}: phase is not increasing")
    return PhaseTrack(values, span)


def _parse_int_list(text: str) -> List[int]:
    try:
        return [int(tok) for tok in text.split(",") if tok.strip()]
    except ValueError as exc:
        raise ValidationError(f"bad integer list {text!r}") from exc


def _out_dir(path: str) -> Path:
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _config_from_args(args, length: int, k: int) -> RdsaConfig:
    return RdsaConfig(
        j1=args.j1, j2=args.j2, m0=args.m0, m1=args.m1, block=args.block,
        epsilon=args.epsilon, shape_len=args.shape_len,
        nufft_tolerance=args.nufft_tol,
    )


def _write_trace(out: Path, trace: ConvergenceTrace) -> None:
    fileio.write_csv(out / "trace.csv", ["iteration", "relative_residual"],
                     list(enumerate(trace.relative_residuals)))


def _write_decomposition(out: Path, result: DecompositionResult, binary: bool,
                         run_meta: Dict[str, object], bands: Sequence[int],
                         phases: Sequence[PhaseTrack]) -> None:
    ext = "bin" if binary else "txt"
    comp_dir = out / "components"
    comp_dir.mkdir(exist_ok=True)
    for i, comp in enumerate(result.components, start=1):
        fileio.write_samples(comp_dir / f"component_{i:02d}.{ext}", comp.samples, binary)
    fileio.write_samples(out / f"residual.{ext}", result.residual.samples, binary)

    rows = []
    for i, exp in enumerate(result.expansions, start=1):
        for n in exp.scale_indices:
            rows.append((i, n, exp.a.get(n, 0.0), exp.b.get(n, 0.0)))
    fileio.write_csv(out / "coefficients.csv", ["component", "n", "a", "b"], rows)

    shapes_dir = out / "shapes"
    shapes_dir.mkdir(exist_ok=True)
    for i, exp in enumerate(result.expansions, start=1):
        for parity, shapes in (("cos", exp.s_c), ("sin", exp.s_s)):
            idx = list(exp.scale_indices)
            header = [f"n_{n}" for n in idx]
            cols = np.column_stack([shapes[n].values for n in idx])
            fileio.write_csv(shapes_dir / f"component_{i:02d}_{parity}.csv",
                             header, cols.tolist())

    _write_trace(out, result.trace)

    banded_dir = out / "banded"
    if bands:
        banded_dir.mkdir(exist_ok=True)
        for i, (exp, phase) in enumerate(zip(result.expansions, phases), start=1):
            for band in bands:
                approx = banded_approximation(exp, phase, band)
                fileio.write_samples(
                    banded_dir / f"component_{i:02d}_band_{band:03d}.{ext}",
                    approx.samples, binary)

    meta = dict(run_meta)
    meta["stop_reason"] = result.trace.stop_reason.value
    for i, exp in enumerate(result.expansions, start=1):
        meta[f"N{i}"] = exp.fundamental
    fileio.write_config(out / "run.cfg", meta)


def _read_decomposition(dir_path: str):
    """Load expansions back from a decompose output directory."""
    root = Path(dir_path)
    if not root.is_dir():
        raise ValidationError(f"decomposition directory not found: {root}")
    meta = fileio.read_config(root / "run.cfg")
    header, rows = fileio.read_csv(root / "coefficients.csv")
    if header != ["component", "n", "a", "b"]:
        raise ValidationError("coefficients.csv has an unexpected header")
    by_comp: Dict[int, Dict[int, tuple]] = {}
    for comp, n, a, b in rows:
        by_comp.setdefault(int(comp), {})[int(n)] = (float(a), float(b))
    expansions = []
    for comp in sorted(by_comp):
        coeffs = by_comp[comp]
        idx = tuple(sorted(coeffs))
        s_c: Dict[int, ShapeTable] = {}
        s_s: Dict[int, ShapeTable] = {}
        for parity, target in (("cos", s_c), ("sin", s_s)):
            path = root / "shapes" / f"component_{comp:02d}_{parity}.csv"
            head, body = fileio.read_csv(path)
            order = [int(h[2:]) for h in head]
            table = np.array([[float(v) for v in row] for row in body])
            for j, n in enumerate(order):
                values = table[:, j]
                nonzero = float(np.max(np.abs(values))) > 0
                target[n] = ShapeTable(values, normalized=nonzero)
        a = {n: coeffs[n][0] for n in idx}
        b = {n: coeffs[n][1] for n in idx}
        fundamental = float(meta.get(f"N{comp}", 0.0)) or 1.0
        expansions.append(MimfExpansion(idx, a, b, s_c, s_s, fundamental))
    return expansions


# ---------------------------------------------------------------------------
# subcommands

def cmd_generate(args) -> int:
    out = _out_dir(args.out)
    if args.example == "ex2":
        if args.n_cycles is None:
            raise ValidationError("ex2 needs --n-cycles")
        data = gen_ex2(args.n_cycles, args.length, shape_len=args.shape_len)
    elif args.example == "ex3":
        data = gen_ex3(args.length, shape_len=args.shape_len)
    else:
        if args.n_cycles is None:
            raise ValidationError("custom generation needs --n-cycles")
        spec = ShapeSpec(args.shape_kind, seed=args.seed) if args.shape_kind == "piecewise_linear" \
            else ShapeSpec(args.shape_kind)
        shape = gen_shape(spec, args.shape_len)
        t = np.arange(args.length) / args.length
        phi = t + args.warp * np.sin(2.0 * np.pi * t)
        phase = PhaseTrack(args.n_cycles * phi, args.n_cycles)
        comp = UniformSignal(shape.eval_at(phase.values))
        from .siggen import GeneratedMixture, MimfTruth
        data = GeneratedMixture(comp, (phase,), (comp,), (
            MimfTruth(args.n_cycles, shape, {0: 1.0}, {}, float(np.mod(phase.values[0], 1.0))),))

    signal = data.signal
    if args.noise_sigma > 0:
        signal = add_noise(signal, args.noise_sigma, args.seed or 0)
    ext = "bin" if args.binary else "txt"
    fileio.write_samples(out / f"signal.{ext}", signal.samples, args.binary)
    for i, (phase, comp) in enumerate(zip(data.phases, data.components), start=1):
        fileio.write_samples(out / f"phase_{i}.{ext}", phase.values, args.binary)
        fileio.write_samples(out / f"component_{i}.{ext}", comp.samples, args.binary)
    meta: Dict[str, object] = {
        "example": args.example, "L": signal.L, "K": len(data.phases),
        "Ls": args.shape_len, "seed": args.seed if args.seed is not None else "",
        "sigma": args.noise_sigma,
    }
    for i, phase in enumerate(data.phases, start=1):
        meta[f"N{i}"] = phase.fundamental
    fileio.write_config(out / "meta.cfg", meta)
    print(f"wrote {args.example} mixture: L={signal.L}, K={len(data.phases)} -> {out}")
    return EXIT_OK


def _run_algorithm(args, signal: UniformSignal, phases: List[PhaseTrack]):
    cfg = _config_from_args(args, signal.L, len(phases))
    if args.algorithm == "rdsa2":
        return rdsa2(signal, phases, cfg), cfg
    if args.algorithm == "rdsa1":
        return rdsa1(signal, phases, cfg), cfg
    if len(phases) != 1:
        raise ValidationError("algorithm 'dsa' is single-component; give exactly one phase")
    req = DsaRequest(signal, phases[0], None, cfg.shape_len,
                     scale_set_for(cfg.m0, cfg.m1), cfg.nufft_tolerance)
    out = run_dsa(req)
    approx = UniformSignal(out.f_c.samples + out.f_s.samples)
    residual = residual_operator(signal, approx)
    rel = residual.norm() / signal.norm() if signal.norm() > 0 else 0.0
    trace = ConvergenceTrace((1.0, rel), (), StopReason.MAX_ITERATIONS)
    expansion = MimfExpansion(req.scale_set, out.a, out.b, out.s_c, out.s_s,
                              phases[0].fundamental)
    result = DecompositionResult((expansion,), (approx,), residual, trace)
    return result, cfg


def cmd_decompose(args) -> int:
    signal = load_signal(args.signal)
    phases = [load_phase(p) for p in args.phase]
    for p in phases:
        if p.L != signal.L:
            raise ValidationError("phase/signal length mismatch")
    result, cfg = _run_algorithm(args, signal, phases)
    out = _out_dir(args.out)
    bands = _parse_int_list(args.bands) if args.bands else []
    meta = {
        "algorithm": args.algorithm, "J1": cfg.j1, "J2": cfg.j2, "M0": cfg.m0,
        "M1": cfg.m1 if cfg.m1 is not None else "", "b": cfg.block,
        "epsilon": cfg.epsilon, "Ls": cfg.shape_len, "L": signal.L,
        "K": len(phases), "nufft_tolerance": cfg.nufft_tolerance,
    }
    # result components are sorted by effective fundamental; persist phases in that order
    order = sorted(range(len(phases)), key=lambda k: effective_fundamental(phases[k]))
    _write_decomposition(out, result, args.binary, meta, bands,
                         [phases[k] for k in order])
    rel = result.trace.relative_residuals[-1]
    print(f"decomposed K={len(phases)} components: relative residual {rel:.3e} "
          f"({result.trace.stop_reason.value}) -> {out}")
    return EXIT_OK


def cmd_approximate(args) -> int:
    expansions = _read_decomposition(args.decomposition)
    phases = [load_phase(p) for p in args.phase]
    if len(phases) != len(expansions):
        raise ValidationError(
            f"decomposition holds {len(expansions)} components but {len(phases)} phases given")
    bands = _parse_int_list(args.bands)
    if not bands:
        raise ValidationError("no bands requested")
    out = _out_dir(args.out)
    ext = "bin" if args.binary else "txt"
    for i, (exp, phase) in enumerate(zip(expansions, phases), start=1):
        for band in bands:
            approx = banded_approximation(exp, phase, band)
            fileio.write_samples(out / f"component_{i:02d}_band_{band:03d}.{ext}",
                                 approx.samples, args.binary)
    print(f"wrote banded approximations for bands {bands} -> {out}")
    return EXIT_OK


def cmd_converge(args) -> int:
    out = _out_dir(args.out)
    if args.trace:
        header, rows = fileio.read_csv(_require_file(args.trace))
        residuals = [float(row[-1]) for row in rows]
    else:
        if not (args.signal and args.phase):
            raise ValidationError("converge needs either --trace or --signal/--phase")
        signal = load_signal(args.signal)
        phases = [load_phase(p) for p in args.phase]
        result, _ = _run_algorithm(args, signal, phases)
        residuals = list(result.trace.relative_residuals)
    if len(residuals) < 3:
        raise ValidationError("trace too short for the convergence diagnostic (need >= 3 entries)")
    eta = convergence_eta(residuals)
    diffs = np.abs(np.diff(residuals))
    mu = np.log(diffs[diffs > 1e-15]) if np.any(diffs > 1e-15) else np.empty(0)
    rows = []
    for j, eps in enumerate(residuals):
        mu_j = f"{mu[j - 1]:.17g}" if 1 <= j <= mu.size else ""
        eta_j = f"{eta[j - 1]:.17g}" if 1 <= j <= eta.size else ""
        rows.append((j, f"{eps:.17g}", mu_j, eta_j))
    fileio.write_csv(out / "convergence.csv", ["iteration", "epsilon1", "mu", "eta"], rows)
    if eta.size:
        print(f"eta over {eta.size} steps: mean {eta.mean():.4g}, "
              f"std {eta.std():.4g}, first {np.array2string(eta[:6], precision=3)}")
    else:
        print("eta sequence empty (residual decrements underflow)")
    return EXIT_OK


def _median_time(fn, reps: int) -> float:
    best = []
    for _ in range(reps):
        t0 = time.perf_counter()
        fn()
        best.append(time.perf_counter() - t0)
    return float(np.median(best))


def _oracle_iteration(signal: UniformSignal, phases: Sequence[PhaseTrack],
                      m0: int, shape_len: int) -> None:
    """One full-band residual-correction sweep with the regression estimator.

    Mirrors the recursion driver's inner iteration (all components, all
    scales, both parities) with partition regression in place of the
    spectral extractor; used for protocol benchmarking only.
    """
    residual = signal.samples.copy()
    for phase in phases:
        n_eff = effective_fundamental(phase)
        n_bins = max(2, int(round(signal.L / n_eff)))
        fold = np.mod(phase.values, 1.0)
        phi = phase.phi()
        update = np.zeros(signal.L)
        for n in scale_set_for(m0):
            for parity in ("cos", "sin"):
                if parity == "sin" and n == 0:
                    continue
                est = rdbr_extract(UniformSignal(residual), phase, None, n, parity, n_bins)
                trig = np.cos if parity == "cos" else np.sin
                from .model import periodic_interp
                update += trig((2.0 * np.pi * n) * phi) * periodic_interp(est.values, fold)
        residual = residual - update


def cmd_bench(args) -> int:
    lengths = _parse_int_list(args.lengths)
    n_values = _parse_int_list(args.n_values)
    if not lengths or not n_values:
        raise ValidationError("benchmark grid is empty")
    out = _out_dir(args.out)
    previous = os.environ.get("MMD_THREADS")
    os.environ["MMD_THREADS"] = "1"  # timings must be single-thread comparable
    try:
        rows = []
        for n_cycles in n_values:
            for L in lengths:
                data = gen_ex2(n_cycles, L, shape_len=args.shape_len)
                signal, phase = data.signal, data.phases[0]
                req = DsaRequest(signal, phase, None, args.shape_len, (1,), args.nufft_tol)
                extract_single(req, 1, "cos")  # warm the jit before timing
                t_dsa = _median_time(lambda: extract_single(req, 1, "cos"), args.reps)
                n_bins = max(2, int(round(L / effective_fundamental(phase))))
                t_rdbr = _median_time(
                    lambda: rdbr_extract(signal, phase, None, 1, "cos", n_bins), args.reps)
                t_sweep = _median_time(
                    lambda: _oracle_iteration(signal, data.phases, args.m0, args.shape_len),
                    max(3, args.reps // 2))
                rows.append((L, n_cycles, t_dsa, t_rdbr, t_sweep,
                             t_rdbr / t_dsa, t_sweep / t_dsa))
        fileio.write_csv(out / "bench.csv",
                         ["L", "N", "t_dsa_single", "t_rdbr_single",
                          "t_oracle_iteration", "speedup_single", "speedup_protocol"],
                         rows)
        # log-log slope of the single-extraction time in L, pooled over N
        slopes = {}
        for n_cycles in n_values:
            pts = [(np.log(r[0]), np.log(r[2])) for r in rows if r[1] == n_cycles]
            A = np.vstack([np.ones(len(pts)), [x for x, _ in pts]]).T
            coef, *_ = np.linalg.lstsq(A, np.array([y for _, y in pts]), rcond=None)
            slopes[n_cycles] = float(coef[1])
        fileio.write_config(out / "bench_summary.cfg", {
            **{f"slope_N{n}": s for n, s in slopes.items()},
            "slope_mean": float(np.mean(list(slopes.values()))),
            "reps": args.reps, "M0": args.m0, "Ls": args.shape_len,
        })
        hdr = f"{'L':>9} {'N':>5} {'t_dsa':>10} {'t_rdbr':>10} {'t_sweep':>10} {'x1':>8} {'xprot':>8}"
        print(hdr)
        for L, n_cycles, td, tr, ts, s1, sp in rows:
            print(f"{L:>9} {n_cycles:>5} {td:>10.4f} {tr:>10.4f} {ts:>10.4f} {s1:>8.2f} {sp:>8.1f}")
        print(f"slope(s): {slopes}")
    finally:
        if previous is None:
            os.environ.pop("MMD_THREADS", None)
        else:
            os.environ["MMD_THREADS"] = previous
    return EXIT_OK


def cmd_whiteness(args) -> int:
    residual = fileio.read_samples(_require_file(args.residual))
    if residual.size == 0:
        raise ValidationError("residual file is empty")
    max_lag = args.max_lag
    if max_lag < 1 or max_lag >= residual.size:
        raise ValidationError("max lag must lie in [1, L)")
    out = _out_dir(args.out)
    centered = residual - residual.mean()
    denom = float(np.dot(centered, centered))
    degenerate = denom == 0.0
    if degenerate:
        rho = np.zeros(max_lag + 1)
        rho[0] = 1.0
    else:
        rho = np.array([
            np.dot(centered[: residual.size - lag], centered[lag:]) / denom
            for lag in range(max_lag + 1)
        ])
    band = 1.96 / np.sqrt(residual.size)
    inside = np.abs(rho[1:]) <= band
    fraction = float(inside.mean()) if inside.size else 0.0
    fileio.write_csv(out / "whiteness.csv", ["lag", "autocorrelation"],
                     list(enumerate(rho)))
    fileio.write_config(out / "whiteness.cfg", {
        "L": residual.size, "max_lag": max_lag, "band": band,
        "fraction_in_band": fraction, "degenerate": int(degenerate),
    })
    state = "degenerate (zero variance)" if degenerate else f"{fraction:.1%} of lags in +-{band:.4f}"
    print(f"autocorrelation over {max_lag} lags: {state} -> {out}")
    return EXIT_OK


def cmd_oracle(args) -> int:
    signal = load_signal(args.signal)
    phase = load_phase(args.phase)
    est = rdbr_extract(signal, phase, None, args.scale, args.parity, args.bins)
    out = _out_dir(args.out)
    h = 1.0 / est.n_bins
    rows = [(k, k * h, est.values[k], int(est.occupied[k])) for k in range(est.n_bins)]
    fileio.write_csv(out / "oracle_bins.csv", ["bin", "left_edge", "value", "occupied"], rows)
    print(f"partition estimate over {est.n_bins} bins "
          f"({int(est.occupied.sum())} occupied) -> {out}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser

def _add_solver_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--algorithm", choices=["dsa", "rdsa1", "rdsa2"], default="rdsa2")
    p.add_argument("--m0", type=int, default=0, help="band parameter M0")
    p.add_argument("--m1", type=int, default=None, help="outer ring bound M1 (rdsa1)")
    p.add_argument("--block", type=int, default=1, help="scale block size b (rdsa2)")
    p.add_argument("--j1", type=int, default=10, help="inner iteration budget J1")
    p.add_argument("--j2", type=int, default=200, help="outer iteration budget J2")
    p.add_argument("--epsilon", type=float, default=1e-6, help="accuracy/stagnation threshold")
    p.add_argument("--shape-len", type=int, default=2000, help="shape bandwidth Ls")
    p.add_argument("--nufft-tol", type=float, default=1e-9, help="NUFFT relative accuracy")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mmd",
        description="Multiresolution mode decomposition: separate a sampled signal "
                    "into oscillatory components with per-scale shapes and coefficients.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="write synthetic benchmark mixtures")
    p.add_argument("--example", choices=["ex2", "ex3", "custom"], required=True)
    p.add_argument("--length", type=int, required=True)
    p.add_argument("--n-cycles", type=float, default=None)
    p.add_argument("--shape-len", type=int, default=2000)
    p.add_argument("--shape-kind", choices=["piecewise_linear", "ecg_like", "harmonic"],
                   default="ecg_like")
    p.add_argument("--warp", type=float, default=0.006)
    p.add_argument("--noise-sigma", type=float, default=0.0)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--binary", action="store_true")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("decompose", help="run a decomposition and write all artifacts")
    p.add_argument("--signal", required=True)
    p.add_argument("--phase", action="append", required=True,
                   help="phase sample file; repeat once per component")
    _add_solver_flags(p)
    p.add_argument("--bands", default="", help="comma list of band limits to also emit")
    p.add_argument("--binary", action="store_true")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_decompose)

    p = sub.add_parser("approximate", help="banded approximations from a stored decomposition")
    p.add_argument("--decomposition", required=True)
    p.add_argument("--phase", action="append", required=True)
    p.add_argument("--bands", required=True)
    p.add_argument("--binary", action="store_true")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_approximate)

    p = sub.add_parser("converge", help="residual-trace diagnostics (eta sequence)")
    p.add_argument("--trace", default=None, help="existing trace.csv to post-process")
    p.add_argument("--signal", default=None)
    p.add_argument("--phase", action="append", default=None)
    _add_solver_flags(p)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_converge)

    p = sub.add_parser("bench", help="timing grid: spectral extraction vs regression oracle")
    p.add_argument("--lengths", required=True, help="comma list of sample counts")
    p.add_argument("--n-values", required=True, help="comma list of cycle counts")
    p.add_argument("--reps", type=int, default=5)
    p.add_argument("--m0", type=int, default=20, help="band for the protocol sweep")
    p.add_argument("--shape-len", type=int, default=1000)
    p.add_argument("--nufft-tol", type=float, default=1e-9)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("whiteness", help="residual autocorrelation report")
    p.add_argument("--residual", required=True)
    p.add_argument("--max-lag", type=int, default=100)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_whiteness)

    p = sub.add_parser("oracle", help="standalone partition-regression extraction")
    p.add_argument("--signal", required=True)
    p.add_argument("--phase", required=True)
    p.add_argument("--scale", type=int, default=0)
    p.add_argument("--parity", choices=["cos", "sin"], default="cos")
    p.add_argument("--bins", type=int, default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_oracle)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except SolverError as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    raise SystemExit(main())
