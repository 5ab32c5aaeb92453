"""Command-line front end.

Verbs: spectrum, prepare, grover, validate. Every run writes its artifacts
and a manifest into one output directory.

Exit codes: 0 success, 1 scientific failure (no convergence, singular system,
unidentified search, failed check), 2 usage or configuration error.

Usage:
    python -m app.cli spectrum --config configs/fig3.json --p 1 --m 0 --out runs/fig3
    python -m app.cli grover --preset fig3 --marked all --compiled
"""

import argparse
import sys
from pathlib import Path
from typing import Callable, Dict, List, Optional

from app.core.config import settings
from app.core.exceptions import ConfigError, FloquetSimError, ValidationError
from app.core.logging import get_logger
from app.schemas.config import PRESETS, ExperimentConfig, load_experiment_config, preset_config
from app.services.artifact_service import ArtifactWriter
from app.services.grover_service import GroverService
from app.services.preparation_service import PreparationService
from app.services.spectrum_service import SpectrumService
from app.services.validation_service import ValidationService

logger = get_logger("floquetsim.cli")

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2


def _common_flags() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="JSON experiment file")
    common.add_argument("--preset", choices=sorted(PRESETS), help="built-in parameter set (default fig3)")
    common.add_argument("--out", type=Path, help="artifact directory")
    common.add_argument("--seed", type=int, help="seed for stochastic checks")
    common.add_argument("--threads", type=int, help="worker pool size")
    return common


def parse_args(argv: Optional[List[str]] = None) -> argparse.Namespace:
    common = _common_flags()
    parser = argparse.ArgumentParser(prog="floquetsim", description="Floquet MAS NMR simulator.")
    sub = parser.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("spectrum", parents=[common], help="readout spectrum of |pm>")
    sp.add_argument("--p", type=int, choices=(0, 1), required=True)
    sp.add_argument("--m", type=int, default=0)
    sp.add_argument("--mode", choices=("crystal", "powder"), default="crystal")
    sp.add_argument("--broadening", type=float, default=None, help="Lorentzian FWHM in Hz")

    pp = sub.add_parser("prepare", parents=[common], help="prepare a pseudo-pure state")
    pp.add_argument("--p", type=int, choices=(0, 1), required=True)
    pp.add_argument("--m", type=int, default=0)
    pp.add_argument("--method", choices=("pass", "gradient"), default="gradient")

    gp = sub.add_parser("grover", parents=[common], help="four-item Grover search")
    gp.add_argument("--marked", default="all", help="'all', 1-4 or 'p,m'")
    gp.add_argument("--compiled", action="store_true", help="use pulse-sequence gate blocks")

    vp = sub.add_parser("validate", parents=[common], help="run the validation suite")
    vp.add_argument("--suite", choices=("fast", "full"), default="fast")
    return parser.parse_args(argv)


def cmd_spectrum(args: argparse.Namespace, config: ExperimentConfig, writer: ArtifactWriter) -> int:
    run = SpectrumService(args.threads).compute(config, args.p, args.m, args.mode, args.broadening)
    writer.write_fid("fid.csv", run.fid)
    writer.write_spectrum("spectrum.csv", run.spectrum)
    writer.write_summary("spectrum", {"config": config.model_dump(mode="json"), **run.summary()})
    writer.write_manifest("spectrum")
    converged = run.converged and run.truncation_converged and run.extra.get("grid_converged", True)
    return EXIT_OK if converged else EXIT_FAILURE


def cmd_prepare(args: argparse.Namespace, config: ExperimentConfig, writer: ArtifactWriter) -> int:
    run = PreparationService(args.threads).compute(config, args.p, args.m, args.method)
    if run.schedules:
        writer.write_csv(
            "pass_schedules.csv",
            ("pitch", "theta_1", "theta_2", "theta_3", "theta_4", "theta_5", "residual"),
            [(s.pitch, *s.positions, s.residual) for s in run.schedules],
        )
    if run.weights is not None:
        w = run.weights
        writer.write_csv("profile_weights.csv", ("pitch", "x_re", "x_im"), zip(w.pitches, w.x.real, w.x.imag))
    if run.density is not None:
        rho = run.density
        rows = []
        for row in range(rho.dim):
            block, p = divmod(row, 2)
            rows.append((p, block - rho.truncation.K, rho.matrix[row, row].real))
        writer.write_csv("populations.csv", ("p", "m", "population"), rows)
    writer.write_summary("prepare", {"config": config.model_dump(mode="json"), **run.summary()})
    writer.write_manifest("prepare")
    return EXIT_OK


def cmd_grover(args: argparse.Namespace, config: ExperimentConfig, writer: ArtifactWriter) -> int:
    outcomes = GroverService(args.threads).compute(config, args.marked, args.compiled)
    for outcome in outcomes:
        if outcome.result is not None:
            p, m = outcome.marked
            writer.write_spectrum(f"grover_{p}_{m}.csv", outcome.result.spectrum)
    writer.write_summary(
        "grover",
        {"config": config.model_dump(mode="json"), "outcomes": [o.summary() for o in outcomes]},
    )
    writer.write_manifest("grover")
    return EXIT_OK if all(o.success for o in outcomes) else EXIT_FAILURE


def cmd_validate(args: argparse.Namespace, config: ExperimentConfig, writer: ArtifactWriter) -> int:
    report = ValidationService(args.threads).compute(config, args.suite, args.seed)
    writer.write_json("report.json", report.as_dict())
    writer.write_manifest("validate")
    for check in report.checks:
        mark = "PASS" if check.passed else "FAIL"
        print(f"{mark} {check.name} measured={check.as_dict()['measured']} tol={check.as_dict()['tolerance']}")
    return EXIT_OK if report.passed else EXIT_FAILURE


COMMANDS: Dict[str, Callable[[argparse.Namespace, ExperimentConfig, ArtifactWriter], int]] = {
    "spectrum": cmd_spectrum,
    "prepare": cmd_prepare,
    "grover": cmd_grover,
    "validate": cmd_validate,
}


def _load_config(args: argparse.Namespace) -> ExperimentConfig:
    if args.config is not None and args.preset is not None:
        raise ConfigError("give --config or --preset, not both")
    config = load_experiment_config(args.config) if args.config is not None else preset_config(args.preset or "fig3")
    if args.seed is not None:
        if args.seed < 0:
            raise ValidationError("--seed must be non-negative")
        config = config.model_copy(update={"seed": args.seed})
    return config


def main(argv: Optional[List[str]] = None) -> int:
    try:
        args = parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK

    logger.info("Command started", extra={"event": "command_start", "command": args.command})
    try:
        if args.threads is not None and args.threads < 1:
            raise ValidationError("--threads must be at least 1")
        config = _load_config(args)
        out = args.out or Path(config.output or Path(settings.OUTPUT_ROOT) / args.command)
        code = COMMANDS[args.command](args, config, ArtifactWriter(out))
    except (ConfigError, ValidationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        code = EXIT_USAGE
    except FloquetSimError as exc:
        print(f"failed: {exc}", file=sys.stderr)
        code = EXIT_FAILURE
    logger.info(
        "Command finished",
        extra={"event": "command_finish", "command": args.command, "exit_code": code},
    )
    return code


if __name__ == "__main__":
    sys.exit(main())
