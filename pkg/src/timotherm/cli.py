"""Command line entry point: ``timotherm run | spectrum | verify | fit | check``.

Exit codes: 0 success, 1 usage or configuration error (or a failed check),
2 hypothesis failure, 3 blow-up or failed step.
"""

from __future__ import annotations

import argparse
import csv
import datetime
import os
import sys

import numpy as np

from . import __version__
from . import diagnostics as diag
from . import generator as gen
from .config import format_config, parse_config, parse_config_text
from .errors import BlowUpError, ConfigError, ContractError, HypothesisViolation, StepFailure
from .integrator import check_hypotheses, run
from .model import check_friction, check_kernel
from .verification import linear_surrogate, verify_suite

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_HYPOTHESIS = 2
EXIT_BLOWUP = 3

ENERGY_HEADER = diag.EnergyRecord.FIELDS


def _fmt(x: float) -> str:
    return f"{x:.17g}"


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_ERROR, f"{self.prog}: error: {message}\n")


def _window(text: str) -> tuple:
    try:
        lo, hi = (float(part) for part in text.split(":"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"window must look like t_lo:t_hi, got {text!r}") from None
    if not lo < hi:
        raise argparse.ArgumentTypeError("window needs t_lo < t_hi")
    return lo, hi


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="timotherm", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def with_config(p):
        p.add_argument("--config", help="key = value configuration file (defaults when omitted)")
        p.add_argument("--override-hypotheses", action="store_true",
                       help="run even when kernel or friction hypotheses fail")

    p = sub.add_parser("run", help="integrate and write energy.csv and manifest.txt")
    with_config(p)
    p.add_argument("--out", required=True, help="output directory")
    p = sub.add_parser("spectrum", help="eigenvalues of the generator to spectrum.csv")
    with_config(p)
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--mode", choices=(gen.NO_MEMORY, gen.EXP_AUGMENTED), default=None,
                   help="generator surrogate (default: exp_augmented for exponential kernels)")
    p = sub.add_parser("verify", help="run the invariant suite and print a pass/fail table")
    with_config(p)
    p = sub.add_parser("fit", help="fit E ~ C0 exp(-delta0 t) to an energy.csv")
    p.add_argument("energy_csv")
    p.add_argument("--window", type=_window, default=None, help="fit window t_lo:t_hi")
    p = sub.add_parser("check", help="report the kernel, friction and weight conditions")
    with_config(p)
    return parser


def _load(args, check: bool = True):
    if args.config:
        return parse_config(args.config, args.override_hypotheses, check)
    return parse_config_text("", override=args.override_hypotheses, check=check)


def write_manifest(path: str, cfg, outputs: dict, extra: dict = None, started=None) -> None:
    started = started or datetime.datetime.now(datetime.timezone.utc)
    with open(path, "w") as fh:
        fh.write(f"version = {__version__}\n")
        fh.write(f"started = {started.isoformat()}\n")
        for key, value in outputs.items():
            fh.write(f"output.{key} = {value}\n")
        for key, value in (extra or {}).items():
            fh.write(f"{key} = {value}\n")
        fh.write("# resolved configuration\n")
        fh.write(format_config(cfg))


def write_energy_csv(path: str, records) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(ENERGY_HEADER)
        for rec in records:
            writer.writerow([_fmt(v) for v in rec.as_tuple()])


def read_energy_csv(path: str) -> tuple:
    """Columns ``t`` and ``E`` of an energy CSV."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or "t" not in header or "E" not in header:
            raise ConfigError(f"{path}: missing header with t and E columns", 1)
        it, iE = header.index("t"), header.index("E")
        t, E = [], []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            try:
                t.append(float(row[it]))
                E.append(float(row[iE]))
            except (ValueError, IndexError):
                raise ConfigError(f"{path}: malformed row", lineno) from None
    return np.array(t), np.array(E)


def cmd_run(args) -> int:
    started = datetime.datetime.now(datetime.timezone.utc)
    cfg = _load(args)
    traj = run(cfg)
    os.makedirs(args.out, exist_ok=True)
    energy_path = os.path.join(args.out, "energy.csv")
    write_energy_csv(energy_path, traj.records)
    write_manifest(os.path.join(args.out, "manifest.txt"), cfg, {"energy": energy_path},
                   {"max_residual": _fmt(traj.max_residual), "steps": traj.n_steps}, started)
    print(f"{traj.n_steps} steps, E(0) = {traj.records[0].E:.6g}, E(T) = {traj.records[-1].E:.6g}, "
          f"max residual = {traj.max_residual:.3e}")
    return EXIT_OK


def cmd_spectrum(args) -> int:
    started = datetime.datetime.now(datetime.timezone.utc)
    cfg = _load(args)
    if not cfg.override_hypotheses:
        check_hypotheses(cfg)
    lin = linear_surrogate(cfg)
    mode = args.mode or (gen.EXP_AUGMENTED if cfg.kernel.is_exponential else gen.NO_MEMORY)
    report = gen.spectrum(gen.assemble(lin, mode=mode).reduced())
    os.makedirs(args.out, exist_ok=True)
    path = os.path.join(args.out, "spectrum.csv")
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(("re", "im"))
        for ev in report.eigenvalues:
            writer.writerow((_fmt(ev.real), _fmt(ev.imag)))
    write_manifest(os.path.join(args.out, "manifest.txt"), lin, {"spectrum": path},
                   {"mode": mode, "abscissa": _fmt(report.abscissa)}, started)
    print(f"{report.eigenvalues.size} eigenvalues, spectral abscissa = {report.abscissa:.10g}")
    return EXIT_OK


def cmd_verify(args) -> int:
    cfg = _load(args)
    rows = verify_suite(cfg)
    width = max(len(r.name) for r in rows)
    for r in rows:
        print(f"{r.name:<{width}}  {'PASS' if r.passed else 'FAIL'}  {r.detail}")
    return EXIT_OK if all(r.passed for r in rows) else EXIT_ERROR


def cmd_fit(args) -> int:
    t, E = read_energy_csv(args.energy_csv)
    fit = diag.fit_decay((t, E), args.window)
    print(f"C0 = {fit.C0:.17g}")
    print(f"delta0 = {fit.delta0:.17g}")
    print(f"r_squared = {fit.r_squared:.17g}")
    print(f"window = {fit.window[0]:.17g}:{fit.window[1]:.17g}")
    return EXIT_OK if fit.delta0 > 0 and fit.r_squared >= 0.995 else EXIT_ERROR


def cmd_check(args) -> int:
    cfg = _load(args, check=False)
    kr = check_kernel(cfg.kernel)
    law = cfg.friction
    fr = check_friction(law, law.eps_prime, max(100.0, 10 * law.eps_prime), samples=20_001)
    times = np.linspace(0.0, cfg.T, 101)
    flags = np.array([diag.check_weights(cfg.weights, cfg.kernel, law, t) for t in times])
    weights_ok = bool(flags.all())
    print(f"kernel    {'PASS' if kr.ok else 'FAIL'}  l = {kr.l:.6g}, xi = {kr.xi_estimate:.6g}"
          + ("" if kr.ok else "  (" + "; ".join(kr.reasons) + ")"))
    print(f"friction  {'PASS' if fr.ok else 'FAIL'}  c_lower = {fr.c_lower:.6g}, "
          f"c_upper = {fr.c_upper:.6g} on [{law.eps_prime:g}, {max(100.0, 10 * law.eps_prime):g}]")
    print(f"weights   {'PASS' if weights_ok else 'FAIL'}  conditions held on [0, {cfg.T:g}]: "
          + " ".join(str(int(v)) for v in flags.all(axis=0)))
    if not (kr.ok and fr.ok):
        return EXIT_HYPOTHESIS
    return EXIT_OK if weights_ok else EXIT_ERROR


COMMANDS = {"run": cmd_run, "spectrum": cmd_spectrum, "verify": cmd_verify, "fit": cmd_fit,
            "check": cmd_check}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except HypothesisViolation as exc:
        print(f"hypothesis failure: {exc}", file=sys.stderr)
        return EXIT_HYPOTHESIS
    except (BlowUpError, StepFailure) as exc:
        print(f"integration failed: {exc}", file=sys.stderr)
        return EXIT_BLOWUP
    except (ConfigError, ContractError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
