"""Command-line driver: synthesis, protocol runs, figure sweeps, invariant
verification, and the generation-rate model. All outputs are CSV with a
reproducibility header (version, config hash, seed)."""
from __future__ import annotations

import argparse
import concurrent.futures
import hashlib
import json
import os
import sys
import warnings

import numpy as np

from . import __version__
from .budget import EfficiencyBudget, FidelityBudget, extrapolated_fidelity, generation_rate
from .emission import EmissionParams, emission_fidelity
from .hamiltonian import SecularApproximationWarning, resonance_spacing
from .noise import OUNoise, ou_from_coherence, fid_echo_signals, fit_t2star
from .presets import load_preset, preset_names, spin_params
from .protocol import (
    ProtocolSpec, ideal_library, ideal_target, lu_equivalence,
    packaged_gate_library, run, verify_appendix_a,
)
from .synthesis import TARGETS, serialize_sequence, synthesize

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_USAGE = 2


def _config_hash(args: argparse.Namespace) -> str:
    payload = json.dumps(
        {k: v for k, v in sorted(vars(args).items())
         if k not in ("func", "output", "workers")},
        default=str, sort_keys=True,
    )
    return hashlib.sha256(payload.encode()).hexdigest()[:16]


def _header(args, out):
    out.write(f"# spincluster {__version__}\n")
    out.write(f"# config_hash={_config_hash(args)}\n")
    out.write(f"# seed={getattr(args, 'seed', 0)}\n")


def _open_output(args):
    if args.output == "-":
        return sys.stdout, False
    return open(args.output, "w"), True


def cmd_synthesize(args) -> int:
    if args.preset not in preset_names():
        print(f"unknown preset {args.preset!r}", file=sys.stderr)
        return EXIT_USAGE
    if args.target not in TARGETS:
        print(f"unknown target {args.target!r}", file=sys.stderr)
        return EXIT_USAGE
    p = spin_params(args.preset)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", SecularApproximationWarning)
        report = synthesize(
            args.target, p, threshold=args.threshold, max_k=args.max_k,
            seed=args.seed, restarts=args.restarts,
            duration_limit=args.duration_limit,
        )
    out, close = _open_output(args)
    out.write(serialize_sequence(report, p))
    if close:
        out.close()
    print(
        f"target={args.target} k={report.sequence.k} "
        f"duration={report.sequence.total_duration * 1e6:.4f}us "
        f"fidelity={report.unitary_fidelity:.7f} "
        f"met_threshold={report.met_threshold}"
    )
    return EXIT_OK if report.met_threshold else EXIT_CHECK_FAILED


def cmd_run(args) -> int:
    if args.preset not in preset_names():
        print(f"unknown preset {args.preset!r}", file=sys.stderr)
        return EXIT_USAGE
    d = load_preset(args.preset)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", SecularApproximationWarning)
        if args.ideal_gates:
            lib, params = ideal_library(), None
            noise = None
        else:
            lib, params, _ = packaged_gate_library()
            t2 = args.t2 if args.t2 is not None else d.get("t2_s", 300e-6)
            ratio = d.get("t2_star_ratio", 0.01)
            t2_star = args.t2_star if args.t2_star is not None else ratio * t2
            noise = ou_from_coherence(t2_star, t2, seed=args.seed)
        spec = ProtocolSpec(
            m=args.m, n=args.n, gate_library=lib, params=params, noise=noise,
            style=args.style, completion=args.completion, trials=args.trials,
            seed=args.seed,
        )
        result = run(spec, components=args.components)
    out, close = _open_output(args)
    _header(args, out)
    out.write("m,n,style,fidelity,fidelity_se,prep_fidelity,block_fidelity,"
              "wall_clock_s,postselect_probability,trials\n")
    out.write(
        f"{args.m},{args.n},{args.style},{result.fidelity:.8f},"
        f"{result.fidelity_se:.2e},{result.prep_fidelity},"
        f"{result.block_fidelity},{result.wall_clock_model:.6e},"
        f"{result.postselect_probability:.6f},{result.trials}\n"
    )
    if close:
        out.close()
    return EXIT_OK


def cmd_rate(args) -> int:
    e = EfficiencyBudget.from_combined(args.eta_combined)
    r = generation_rate(e, args.photons, args.duration)
    out, close = _open_output(args)
    _header(args, out)
    out.write("eta_combined,photons,duration_s,rate_hz\n")
    out.write(f"{args.eta_combined},{args.photons},{args.duration:.6e},{r:.6e}\n")
    if close:
        out.close()
    return EXIT_OK


def _grid_map(fn, items, workers):
    """Ordered map, optionally across processes; output order (and therefore
    the CSV bytes) does not depend on the worker count."""
    if workers <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with concurrent.futures.ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def _fig3c_point(item):
    tau, w = item
    return emission_fidelity(EmissionParams(tau=tau, delta_omega=w))


def _figure_fig3c(args, out):
    out.write("tau_s,delta_omega_rad_s,fidelity\n")
    taus = np.geomspace(args.tau_min, args.tau_max, args.grid)
    omegas = np.geomspace(args.omega_min, args.omega_max, args.grid)
    points = [(tau, w) for tau in taus for w in omegas]
    fids = _grid_map(_fig3c_point, points, args.workers)
    for (tau, w), f in zip(points, fids):
        out.write(f"{tau:.6e},{w:.6e},{f:.8f}\n")


def _noisy_2x2(item):
    t2, trials, seed, components = item
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", SecularApproximationWarning)
        lib, params, _ = packaged_gate_library()
        spec = ProtocolSpec(
            m=2, n=2, gate_library=lib, params=params,
            noise=ou_from_coherence(0.01 * t2, t2, seed=seed),
            style="lean", trials=trials, seed=seed,
        )
        return run(spec, components=components)


def _figure_fig3b(args, out):
    out.write("t2_s,n_columns,photons,fidelity,fidelity_spin_photon_94\n")
    t2_grid = (2e-6, 8e-6, 300e-6)
    results = _grid_map(
        _noisy_2x2, [(t2, args.trials, args.seed, True) for t2 in t2_grid],
        args.workers,
    )
    for t2, result in zip(t2_grid, results):
        for n in range(1, args.max_columns + 1):
            fb = FidelityBudget(
                result.prep_fidelity, result.block_fidelity, 1.0, 2, n
            )
            fb94 = FidelityBudget(
                result.prep_fidelity, result.block_fidelity, 0.94, 2, n
            )
            out.write(
                f"{t2:.2e},{n},{2 * n},{extrapolated_fidelity(fb):.6f},"
                f"{extrapolated_fidelity(fb94):.6f}\n"
            )


def _figure_fig3a(args, out):
    out.write("a_par_hz,t2_s,fidelity,fidelity_se\n")
    _, params, _ = packaged_gate_library()
    results = _grid_map(
        _noisy_2x2,
        [(t2, args.trials, args.seed, False) for t2 in args.t2_list],
        args.workers,
    )
    for t2, result in zip(args.t2_list, results):
        out.write(
            f"{params.a_par:.3e},{t2:.3e},{result.fidelity:.6f},"
            f"{result.fidelity_se:.2e}\n"
        )


def _figure_rates(args, out):
    out.write("photons,duration_s,rate_hz\n")
    e = EfficiencyBudget.from_combined(0.85)
    for photons, duration in ((10, 3e-6), (100, 30e-6)):
        out.write(
            f"{photons},{duration:.2e},"
            f"{generation_rate(e, photons, duration):.6e}\n"
        )


def cmd_figure(args) -> int:
    makers = {
        "fig3a": _figure_fig3a, "fig3b": _figure_fig3b,
        "fig3c": _figure_fig3c, "rates": _figure_rates,
    }
    out, close = _open_output(args)
    _header(args, out)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", SecularApproximationWarning)
        makers[args.name](args, out)
    if close:
        out.close()
    return EXIT_OK


def cmd_verify(args) -> int:
    checks = []

    def check(name, fn):
        try:
            ok, detail = fn()
        except Exception as exc:  # noqa: BLE001 - report, do not crash
            ok, detail = False, f"exception: {exc}"
        checks.append((name, ok, detail))

    with warnings.catch_warnings():
        warnings.simplefilter("ignore", SecularApproximationWarning)
        rep = verify_appendix_a()
        check(
            "appendix_state_tracking",
            lambda: (
                rep.equivalent and rep.all_ones_probability > 0,
                f"overlap={rep.overlap:.9f} p(all-1)={rep.all_ones_probability:.4f}",
            ),
        )

        def noiseless_grid():
            for m in (2, 3):
                for n in (1, 2):
                    spec = ProtocolSpec(m=m, n=n, gate_library=ideal_library())
                    r = run(spec)
                    if abs(r.fidelity - 1.0) > 1e-9:
                        return False, f"M={m} N={n} F={r.fidelity}"
            return True, "F=1 for (M,N) in {2,3}x{1,2}"

        check("noiseless_self_consistency", noiseless_grid)

        def resonance_ratios():
            p = spin_params("siv29")
            c1 = resonance_spacing(p, 1, "conditional")
            c2 = resonance_spacing(p, 2, "conditional")
            u1 = resonance_spacing(p, 1, "unconditional")
            ok = np.isclose(c2 / c1, 3.0) and np.isclose(u1 / c1, 2.0)
            return ok, f"c2/c1={c2 / c1:.6f} u1/c1={u1 / c1:.6f}"

        check("resonance_spacing_ratios", resonance_ratios)

        def seed_reproducibility():
            n1 = OUNoise(b=1e6, tau_c=1e-3, seed=args.seed)
            from .noise import sample_trajectory
            a = sample_trajectory(n1, 1e-4)
            b = sample_trajectory(n1, 1e-4)
            return bool(np.array_equal(a, b)), "identical seed, identical bytes"

        check("seed_reproducibility", seed_reproducibility)

        def ou_calibration():
            noise = ou_from_coherence(1e-6, 10e-6, seed=args.seed)
            times = np.linspace(0.05e-6, 2.5e-6, 12)
            fid, _ = fid_echo_signals(noise, times, 800, seed=args.seed)
            t2s = fit_t2star(times, fid)
            ok = abs(t2s - noise.t2_star) / noise.t2_star < 0.05
            return ok, f"fitted T2*={t2s * 1e6:.3f}us vs {noise.t2_star * 1e6:.3f}us"

        check("ou_t2star_calibration", ou_calibration)

        def monotone_in_noise():
            lib, params, _ = packaged_gate_library()
            fids = []
            inject = getattr(args, "inject_b", None)
            for t2 in (300e-6, 2e-6):
                if inject:
                    noise = OUNoise(b=inject, tau_c=1e-3, seed=args.seed)
                else:
                    noise = ou_from_coherence(0.01 * t2, t2, seed=args.seed)
                spec = ProtocolSpec(
                    m=2, n=1, gate_library=lib, params=params, noise=noise,
                    style="lean", trials=150, seed=args.seed,
                )
                fids.append(run(spec).fidelity)
            ok = fids[0] >= fids[1] and fids[0] > 0.99
            return ok, f"F(T2=300us)={fids[0]:.5f} F(T2=2us)={fids[1]:.5f}"

        check("protocol_noise_monotonicity", monotone_in_noise)

        def emission_limits():
            f0 = emission_fidelity(EmissionParams(tau=1e-9, delta_omega=0.0))
            finf = emission_fidelity(EmissionParams(tau=1e-9, delta_omega=1e18))
            ok = abs(f0 - 1) < 1e-12 and abs(finf - np.sqrt(0.5)) < 1e-6
            return ok, f"F(0)={f0:.6f} F(inf)={finf:.6f}"

        check("emission_fidelity_limits", emission_limits)

        def lu_prefilter():
            t1 = ideal_target(2, 1)
            t2_ = ideal_target(3, 1)
            same = lu_equivalence(t1, t1)
            return same.equivalent, f"self-overlap={same.overlap:.9f}"

        check("lu_equivalence_sanity", lu_prefilter)

    failed = [c for c in checks if not c[1]]
    for name, ok, detail in checks:
        print(f"{'PASS' if ok else 'FAIL'} {name}: {detail}")
    print(f"{len(checks) - len(failed)}/{len(checks)} checks passed")
    return EXIT_OK if not failed else EXIT_CHECK_FAILED


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="spincluster",
        description="Photonic cluster-state generation simulator",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    s = sub.add_parser("synthesize", help="compile a two-qubit gate")
    s.add_argument("--target", required=True)
    s.add_argument("--preset", default="siv29")
    s.add_argument("--threshold", type=float, default=0.999)
    s.add_argument("--max-k", type=int, default=20)
    s.add_argument("--restarts", type=int, default=40)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--duration-limit", type=float, default=None)
    s.add_argument("--output", default="-")
    s.set_defaults(func=cmd_synthesize)

    r = sub.add_parser("run", help="run the cluster-state protocol")
    r.add_argument("--m", type=int, default=2)
    r.add_argument("--n", type=int, default=2)
    r.add_argument("--preset", default="siv29")
    r.add_argument("--style", default="lean", choices=["lean", "pedagogical"])
    r.add_argument("--completion", default="corrected",
                   choices=["corrected", "postselect"])
    r.add_argument("--ideal-gates", action="store_true")
    r.add_argument("--t2", type=float, default=None)
    r.add_argument("--t2-star", type=float, default=None)
    r.add_argument("--trials", type=int, default=2000)
    r.add_argument("--components", action="store_true")
    r.add_argument("--seed", type=int, default=0)
    r.add_argument("--output", default="-")
    r.set_defaults(func=cmd_run)

    f = sub.add_parser("figure", help="emit a figure-reproduction CSV")
    f.add_argument("name", choices=["fig3a", "fig3b", "fig3c", "rates"])
    f.add_argument("--grid", type=int, default=20)
    f.add_argument("--tau-min", type=float, default=0.1e-9)
    f.add_argument("--tau-max", type=float, default=30e-9)
    f.add_argument("--omega-min", type=float, default=1e7)
    f.add_argument("--omega-max", type=float, default=1e11)
    f.add_argument("--t2-list", type=float, nargs="+",
                   default=[2e-6, 8e-6, 300e-6])
    f.add_argument("--max-columns", type=int, default=50)
    f.add_argument("--trials", type=int, default=500)
    f.add_argument("--workers", type=int, default=os.cpu_count() or 1)
    f.add_argument("--seed", type=int, default=0)
    f.add_argument("--output", default="-")
    f.set_defaults(func=cmd_figure)

    v = sub.add_parser("verify", help="run the invariant suite")
    v.add_argument("--seed", type=int, default=0)
    v.add_argument("--inject-b", type=float, default=None,
                   help="override the bath strength (rad/s) to exercise the "
                        "failure path")
    v.set_defaults(func=cmd_verify)

    t = sub.add_parser("rate", help="generation-rate model")
    t.add_argument("--eta-combined", type=float, default=0.85)
    t.add_argument("--photons", type=int, default=10)
    t.add_argument("--duration", type=float, default=3e-6)
    t.add_argument("--seed", type=int, default=0)
    t.add_argument("--output", default="-")
    t.set_defaults(func=cmd_rate)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
