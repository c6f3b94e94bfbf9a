"""Command-line front end.

Subcommands: gen-circuit, sample, validate, cost, oracle-check.  Exit
codes: 0 success, 1 usage or configuration error, 2 capacity guard, 3
validation failure.  --seed, --threads and --out override the
corresponding config values; thread count never changes results, only
wall time.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import cost as costmod
from . import io as iomod
from . import samplers as s
from .config import (build_circuit, config_fingerprint, load_config,
                     resolve_unitary)
from .errors import (CapacityError, ConfigurationError, FormatError,
                     GbsimError, ValidationFailure)
from .pipeline import run_pipeline

__all__ = ["main"]

ORACLE_TOL = 1e-6


def _apply_overrides(config, args):
    if args.seed is not None:
        config = replace(config, seed=int(args.seed))
    if args.threads is not None:
        config = replace(config, threads=int(args.threads))
    if args.out is not None:
        config = replace(config, output_dir=args.out)
    return config


def _cmd_gen_circuit(args) -> int:
    config = _apply_overrides(load_config(args.config), args)
    resolved = resolve_unitary(config)
    build_circuit(resolved)  # validates unitarity and squeezer layout
    out_dir = Path(config.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / "circuit.ini"
    iomod.write_circuit_file(path, resolved)
    print(f"wrote {path}")
    print(f"fingerprint: {config_fingerprint(config)}")
    return 0


def _cmd_sample(args) -> int:
    config = _apply_overrides(load_config(args.config), args)
    circuit = build_circuit(config)
    fingerprint = config_fingerprint(config)
    count = args.count if args.count is not None else config.sample_count
    model_index = (config.models.index(args.model)
                   if args.model in config.models else 0)
    child = s._child_seed(config.seed, model_index)
    ss = s.sample_model(args.model, circuit, count, child,
                        threads=config.threads)
    ss = s.SampleSet(fingerprint, ss.model, ss.seed, ss.patterns,
                     phase_index=ss.phase_index)
    out_dir = Path(config.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / f"samples-{args.model}.txt"
    iomod.write_sample_file(path, ss)
    print(f"wrote {path} ({ss.count} samples, mean clicks "
          f"{float(ss.click_counts().mean()):.3f})")
    return 0


def _cmd_validate(args) -> int:
    config = _apply_overrides(load_config(args.config), args)
    status, report, out_dir = run_pipeline(config)
    for rec in report.records:
        flag = "PASS" if rec.passed else ("FAIL" if rec.passed is False else "INFO")
        print(f"{flag} {rec.test}")
    print(f"report: {out_dir / 'report.csv'}")
    if status != 0:
        raise ValidationFailure(
            "failed checks: " + ", ".join(report.failed_tests())
        )
    return 0


def _cmd_cost(args) -> int:
    config = _apply_overrides(load_config(args.config), args)
    fingerprint = config_fingerprint(config)
    samples = iomod.read_sample_file(args.samples)
    if samples.fingerprint != fingerprint:
        raise ConfigurationError(
            f"sample file fingerprint {samples.fingerprint[:12]}... does not "
            f"match config {fingerprint[:12]}...; refusing to mix experiments"
        )
    cfg = costmod.CostConfig(config.machine_flops, config.kernel_constant,
                             config.collection_time)
    rows = costmod.cost_table(samples, cfg)
    ratio = costmod.advantage_ratio(samples, cfg)
    out_dir = Path(config.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / "cost.csv"
    iomod.write_cost_csv(path, fingerprint, rows, ratio)
    print(f"wrote {path}")
    print(f"advantage_log10: {ratio!r}")
    return 0


def _cmd_oracle_check(args) -> int:
    # randomized cross-check of the threshold kernel against the
    # number-basis reference on small circuits
    from . import fock, gaussian as g, threshold as t
    from .samplers import _child_seed

    rng_seed = 0 if args.seed is None else int(args.seed)
    worst = 0.0
    for trial in range(args.trials):
        trial_seed = _child_seed(rng_seed, trial)
        rng = np.random.default_rng(trial_seed)
        modes = int(rng.integers(2, 5))
        r = float(rng.uniform(0.2, 0.6))
        eta = float(rng.uniform(0.7, 1.0))
        phase = float(rng.uniform(0.0, 2 * np.pi))
        cutoff = 7 if eta < 1.0 else 8
        sq = g.SqueezerSpec(r, phase, (0, 1))
        u = g.haar_random_unitary(modes, seed=trial_seed)
        state = g.build_input_state([sq], modes)
        state = g.apply_unitary(state, u)
        state = g.apply_loss(state, np.full(modes, eta))

        psi = fock.schmidt_input_state([sq], modes, cutoff=cutoff)
        psi = fock.fock_apply_unitary(psi, u)
        psi = fock.fock_apply_loss(psi, np.full(modes, eta))
        dist = fock.fock_click_distribution(psi)
        budget = ORACLE_TOL + psi.norm_deficit
        for ix in range(2 ** modes):
            pat = t.index_pattern(ix, modes)
            engine = t.pattern_probability(state, pat)
            gap = abs(engine - dist[ix])
            worst = max(worst, gap - psi.norm_deficit)
            if gap > budget:
                raise ValidationFailure(
                    f"trial {trial}: pattern {pat} engine {engine!r} vs "
                    f"oracle {dist[ix]!r} differs by {gap!r} > {budget!r}"
                )
    print(f"{args.trials} circuits agree within {ORACLE_TOL} + truncation tail "
          f"(worst excess {max(worst, 0.0):.3e})")
    return 0


class _Parser(argparse.ArgumentParser):
    """argparse exits 2 on usage errors; map them onto exit code 1 instead
    so 2 stays reserved for capacity guards."""

    def error(self, message):
        raise ConfigurationError(f"usage: {message}")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None,
                        help="override the config seed")
    common.add_argument("--threads", type=int, default=None,
                        help="worker threads for the probability kernel")
    common.add_argument("--out", default=None,
                        help="override the config output directory")

    parser = _Parser(
        prog="gbsim",
        description="Desk-scale Gaussian boson sampling simulation and "
                    "verification workbench.",
    )
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("gen-circuit", parents=[common],
                       help="resolve and write the circuit file")
    p.add_argument("--config", required=True)
    p.set_defaults(func=_cmd_gen_circuit)

    p = sub.add_parser("sample", parents=[common],
                       help="generate samples for one model")
    p.add_argument("--config", required=True)
    p.add_argument("--model", required=True,
                   choices=list(s.MODEL_TAGS))
    p.add_argument("--count", type=int, default=None)
    p.set_defaults(func=_cmd_sample)

    p = sub.add_parser("validate", parents=[common],
                       help="run the full sampling + validation pipeline")
    p.add_argument("--config", required=True)
    p.set_defaults(func=_cmd_validate)

    p = sub.add_parser("cost", parents=[common],
                       help="cost an existing sample file")
    p.add_argument("--config", required=True)
    p.add_argument("--samples", required=True)
    p.set_defaults(func=_cmd_cost)

    p = sub.add_parser("oracle-check", parents=[common],
                       help="cross-check the kernel against the number-basis oracle")
    p.add_argument("--trials", type=int, default=5)
    p.set_defaults(func=_cmd_oracle_check)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except (ConfigurationError, FormatError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except CapacityError as exc:
        print(f"capacity error: {exc}", file=sys.stderr)
        return 2
    except ValidationFailure as exc:
        print(f"validation failure: {exc}", file=sys.stderr)
        return 3
    except GbsimError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
