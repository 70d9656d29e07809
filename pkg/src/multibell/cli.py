"""Command-line front end: each subcommand writes one CSV dataset.

Every CSV starts with ``#`` metadata lines (package version and the full
run configuration), then a header row.  Numbers carry 12 significant
digits and an undefined ratio is written as ``undefined``.

Exit codes: 0 success, 2 configuration error, 3 undefined score,
4 truncation error.
"""

from __future__ import annotations

import argparse
import csv
import io
import sys
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from . import __version__
from .bell import BellScore, bell_score, critical_transmission, optimize_psi
from .config import OBJECTIVES, RULES, SOURCES, WINDOW_FORMS, ConfigError, RunConfig
from .errors import DomainError, NoRootError, TruncationError, UndefinedScoreError
from .sources import mean_flux, photon_number_distribution

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_UNDEFINED = 3
EXIT_TRUNCATION = 4

SCORE_COLUMNS = [
    "psi", "s_strong", "s_weak",
    "joint_ab", "joint_abp", "joint_apb", "joint_apbp",
    "marginal_a", "marginal_b", "one_sided_a", "one_sided_b",
]


def fmt(value) -> str:
    if value is None:
        return "undefined"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return f"{float(value):.12g}"


def _score_cells(score: BellScore) -> list[str]:
    p = score.probabilities
    return [fmt(v) for v in (
        score.psi, score.s_strong, score.s_weak,
        p.joint_ab, p.joint_abp, p.joint_apb, p.joint_apbp,
        p.marginal_a, p.marginal_b, p.one_sided_a, p.one_sided_b,
    )]


def _undefined_cells() -> list[str]:
    return ["undefined"] * len(SCORE_COLUMNS)


class Report:
    """Collects metadata, header and rows, then renders deterministic CSV."""

    def __init__(self, command: str, cfg: RunConfig):
        self.meta = [f"multibell {__version__} {command}", f"config {cfg.emit()}"]
        self.header: list[str] = []
        self.rows: list[list[str]] = []

    def render(self) -> str:
        buf = io.StringIO()
        for line in self.meta:
            buf.write(f"# {line}\n")
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(self.header)
        writer.writerows(self.rows)
        return buf.getvalue()


def _score_at(cfg: RunConfig, rule, channel) -> BellScore:
    psi = cfg.fixed_psi()
    source = cfg.source_model()
    if psi is None:
        return optimize_psi(source, rule, channel, cfg.grid_step, cfg.refine_tol,
                            cfg.objective).score
    return bell_score(source, rule, psi, channel)


def _objective_value(cfg: RunConfig, score: BellScore):
    return score.s_strong if cfg.objective == "strong" else score.s_weak


def cmd_bell(cfg: RunConfig) -> Report:
    report = Report("bell", cfg)
    score = _score_at(cfg, cfg.outcome_rule(), cfg.channel())
    if _objective_value(cfg, score) is None:
        raise UndefinedScoreError(f"{cfg.objective} ratio has a zero denominator")
    report.header = list(SCORE_COLUMNS)
    report.rows.append(_score_cells(score))
    return report


def cmd_optimize(cfg: RunConfig) -> Report:
    """Best psi at the configured T plus the strong-ratio critical transmission.

    A fixed ``--psi`` skips the search and reports the threshold at that angle.
    """
    report = Report("optimize", cfg)
    rule = cfg.outcome_rule()
    source = cfg.source_model()
    score = _score_at(cfg, rule, cfg.channel())
    best = _objective_value(cfg, score)
    if best is None:
        raise UndefinedScoreError(f"{cfg.objective} ratio has a zero denominator")
    try:
        t_star = critical_transmission(source, rule, score.psi, eps=cfg.eps)
    except NoRootError:
        t_star = None
    report.header = ["objective", "s_star", *SCORE_COLUMNS, "t_critical"]
    report.rows.append([cfg.objective, fmt(best), *_score_cells(score),
                        "none" if t_star is None else fmt(t_star)])
    return report


def cmd_dist(cfg: RunConfig) -> Report:
    report = Report("dist", cfg)
    weights = cfg.source_model().weights(cfg.eps)
    report.meta.append(f"n_max {weights.n_max}")
    report.meta.append(f"tail_mass {fmt(weights.tail_mass)}")
    report.meta.append(f"raw_norm {fmt(weights.raw_norm)}")
    report.header = ["n", "c_n", "p_n"]
    probs = photon_number_distribution(weights)
    for n, (c, p) in enumerate(zip(weights.weights, probs)):
        report.rows.append([str(n), fmt(c), fmt(p)])
    return report


def _sweep_cells(cfg: RunConfig, rule, t: float) -> list[str]:
    try:
        return _score_cells(_score_at(cfg, rule, cfg.channel(t)))
    except UndefinedScoreError:
        return _undefined_cells()


def cmd_sweep_t(cfg: RunConfig) -> Report:
    report = Report("sweep-t", cfg)
    rule = cfg.outcome_rule()
    report.header = ["t", *SCORE_COLUMNS]
    for t in cfg.transmissions():
        report.rows.append([fmt(t), *_sweep_cells(cfg, rule, t)])
    return report


def cmd_highflux(cfg: RunConfig) -> Report:
    """Window-rule ratios against the window width and the transmission."""
    if cfg.rule != "window":
        cfg = cfg.updated(rule="window")
    report = Report("highflux", cfg)
    xm = cfg.window_xm()
    if cfg.r is not None:
        report.meta.append(f"mean_flux {fmt(mean_flux(cfg.r))}")
    report.meta.append(f"xm {xm}")
    deltas = [cfg.delta] if cfg.delta_max is None else list(range(cfg.delta_max + 1))
    report.header = ["delta", "t", *SCORE_COLUMNS]
    for delta in deltas:
        rule = cfg.outcome_rule(delta)
        for t in cfg.transmissions():
            report.rows.append([str(delta), fmt(t), *_sweep_cells(cfg, rule, t)])
    return report


COMMANDS = {
    "bell": cmd_bell,
    "dist": cmd_dist,
    "sweep-t": cmd_sweep_t,
    "highflux": cmd_highflux,
    "optimize": cmd_optimize,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="multibell",
        description="Multi-photon Bell-inequality predictions for parametric down-conversion.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    common = argparse.ArgumentParser(add_help=False)
    s = argparse.SUPPRESS
    common.add_argument("--config", help="JSON run configuration; flags override it")
    common.add_argument("--source", choices=SOURCES, default=s)
    common.add_argument("--n", type=int, default=s, help="pair number of the spin source or rule")
    common.add_argument("--r", type=float, default=s, help="parametric gain")
    common.add_argument("--rule", choices=RULES, default=s)
    common.add_argument("--f", type=float, default=s, help="fraction threshold")
    common.add_argument("--xm", type=int, default=s, help="window start; defaults to round(2 sinh^2 r)")
    common.add_argument("--delta", type=int, default=s, help="window width")
    common.add_argument("--delta-max", type=int, default=s, help="sweep widths 0..delta-max")
    common.add_argument("--t", type=float, default=s, help="transmission")
    common.add_argument("--t-min", type=float, default=s)
    common.add_argument("--t-max", type=float, default=s)
    common.add_argument("--t-steps", type=int, default=s)
    common.add_argument("--psi", default=s, help="'optimize' or a step angle in radians")
    common.add_argument("--objective", choices=OBJECTIVES, default=s)
    common.add_argument("--window-form", choices=WINDOW_FORMS, default=s)
    common.add_argument("--eps", type=float, default=s, help="tail tolerance")
    common.add_argument("--grid-step", type=float, default=s)
    common.add_argument("--refine-tol", type=float, default=s)
    common.add_argument("--out", default=s, help="output CSV path (default stdout)")
    for name in COMMANDS:
        sub.add_parser(name, parents=[common])
    return parser


def load_config(args: argparse.Namespace) -> RunConfig:
    flags = {k: v for k, v in vars(args).items() if k not in ("command", "config")}
    if args.config:
        try:
            text = Path(args.config).read_text()
        except OSError as exc:
            raise ConfigError("config", str(exc)) from None
        base = RunConfig.parse(text).to_dict()
    else:
        base = {}
    base.update(flags)
    return RunConfig.from_dict(base)


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    try:
        cfg = load_config(args)
        report = COMMANDS[args.command](cfg)
    except (ConfigError, DomainError) as exc:
        print(f"multibell: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except UndefinedScoreError as exc:
        print(f"multibell: undefined score: {exc}", file=sys.stderr)
        return EXIT_UNDEFINED
    except TruncationError as exc:
        print(f"multibell: truncation error: {exc}", file=sys.stderr)
        return EXIT_TRUNCATION
    text = report.render()
    if cfg.out:
        Path(cfg.out).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def _iter_rows(text: str) -> Iterable[list[str]]:
    lines = [line for line in text.splitlines() if not line.startswith("#")]
    return csv.reader(lines)


def read_report(text: str) -> tuple[list[str], list[dict[str, str]]]:
    """Split rendered CSV into metadata lines and row dicts."""
    meta = [line[2:] for line in text.splitlines() if line.startswith("# ")]
    rows = list(_iter_rows(text))
    header, body = rows[0], rows[1:]
    return meta, [dict(zip(header, row)) for row in body]


if __name__ == "__main__":
    sys.exit(main())
