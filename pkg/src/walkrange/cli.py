"""Command line front end: simulate, analytic, fit, verify."""

import argparse
import csv
import json
import os
import sys
from dataclasses import dataclass

from walkrange import __version__, analytic
from walkrange.estimators import (
    DEFAULT_SEED,
    ExperimentPlan,
    _parse_statistics,
    regular_variation_fit,
    run_experiment,
)
from walkrange.groups import get_group
from walkrange.laws import parse_law
from walkrange.reporting import _field, _num

GROUP_TOKENS = ("z1", "z2", "z3", "f2", "heis")
QUANTITIES = ("green", "akernel", "taboo2", "gamma", "hitconst")


@dataclass(frozen=True)
class RunConfig:
    """Validated invocation; `to_argv` and `parse_args` round-trip."""

    subcommand: str
    plan: ExperimentPlan = None
    out: str = None
    group: str = "z1"
    law: str = "srw"
    quantity: str = None
    arg: str = ""
    fit_in: str = None
    fit_statistic: str = None
    fit_range: tuple = None
    tier: str = None
    threads: int = 1

    def to_argv(self):
        if self.subcommand == "simulate":
            p = self.plan
            argv = [
                "simulate",
                "--group", p.group,
                "--law", p.law,
                "--steps", str(p.steps),
                "--reps", str(p.reps),
                "--stats", ",".join(p.statistics),
                "--seed", str(p.seed),
            ]
            if p.two_sided:
                argv.append("--two-sided")
            if p.horizon is not None:
                argv.extend(["--horizon", str(p.horizon)])
            if p.base != "bernoulli":
                argv.extend(["--base", p.base])
            argv.extend(["--threads", str(p.workers), "--out", self.out])
            return argv
        if self.subcommand == "analytic":
            argv = [
                "analytic",
                "--group", self.group,
                "--law", self.law,
                "--quantity", self.quantity,
            ]
            if self.arg:
                argv.extend(["--arg", self.arg])
            return argv
        if self.subcommand == "fit":
            return [
                "fit",
                "--in", self.fit_in,
                "--statistic", self.fit_statistic,
                "--range", "%d:%d" % self.fit_range,
            ]
        return ["verify", "--tier", self.tier, "--threads", str(self.threads)]


def _split_stats(text):
    """Split a --stats list on the commas between tokens.

    Lattice elements carry commas of their own (`folner:1,0`), so a
    segment only starts a new token when it begins with a statistic
    keyword; anything else continues the previous element.
    """
    out = []
    for seg in text.split(","):
        seg = seg.strip()
        if not seg:
            continue
        head = seg.split(":", 1)[0]
        if seg in ("range", "boundary") or head in ("vboundary", "folner") or not out:
            out.append(seg)
        else:
            out[-1] += "," + seg
    return tuple(out)


def _positive_int(text):
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError("expected an integer, got %r" % text)
    if value <= 0:
        raise argparse.ArgumentTypeError("expected a positive integer, got %d" % value)
    return value


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="walkrange",
        description="Range, boundary, and escape statistics of walks on groups.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="subcommand", required=True)

    sim = sub.add_parser("simulate", help="run a Monte Carlo experiment plan")
    sim.add_argument("--group", required=True, choices=GROUP_TOKENS)
    sim.add_argument("--law", required=True, help="srw | atoms:<file> | zeta:<a> | cauchy | lazy:<r>:<law>")
    sim.add_argument("--steps", required=True, type=_positive_int)
    sim.add_argument("--reps", required=True, type=_positive_int)
    sim.add_argument("--stats", required=True,
                     help="comma list of range | boundary | vboundary:<v> | folner:<g>")
    sim.add_argument("--seed", type=int, default=DEFAULT_SEED)
    sim.add_argument("--two-sided", action="store_true",
                     help="grow the visited set from both ends of a doubly infinite walk")
    sim.add_argument("--horizon", type=_positive_int, default=None)
    sim.add_argument("--base", default="bernoulli",
                     help="bernoulli | rotation:<theta>:<beta>[:<x0|random>]")
    sim.add_argument("--threads", type=_positive_int, default=os.cpu_count() or 1,
                     help="worker count; affects speed only, never results")
    sim.add_argument("--out", required=True, help="output path ending in .csv or .json")

    ana = sub.add_parser("analytic", help="quadrature and series constants")
    ana.add_argument("--group", default="z1", choices=GROUP_TOKENS)
    ana.add_argument("--law", required=True)
    ana.add_argument("--quantity", required=True, choices=QUANTITIES)
    ana.add_argument("--arg", default="", help="group element literal, e.g. 1,0,-2 or abA")

    fit = sub.add_parser("fit", help="log-log regression on a simulation CSV")
    fit.add_argument("--in", dest="fit_in", required=True, help="CSV produced by simulate")
    fit.add_argument("--statistic", required=True)
    fit.add_argument("--range", dest="fit_range", required=True, help="<nmin>:<nmax>")

    ver = sub.add_parser("verify", help="run the acceptance suite")
    ver.add_argument("--tier", required=True, choices=("quick", "full"))
    ver.add_argument("--threads", type=_positive_int, default=os.cpu_count() or 1)
    return parser


def parse_args(argv):
    parser = _build_parser()
    ns = parser.parse_args(argv)

    if ns.subcommand == "simulate":
        group = get_group(ns.group)
        try:
            parse_law(ns.law, group)
        except (ValueError, OSError) as exc:
            parser.error("--law: %s" % exc)
        statistics = _split_stats(ns.stats)
        if not statistics:
            parser.error("--stats: empty statistic list")
        try:
            _parse_statistics(group, statistics)
        except ValueError as exc:
            parser.error("--stats: %s" % exc)
        if not ns.out.endswith((".csv", ".json")):
            parser.error("--out: path must end in .csv or .json, got %r" % ns.out)
        if ns.two_sided and group.kind not in ("z1", "z2", "z3"):
            parser.error("--two-sided: only lattice groups have a two-sided form")
        if ns.base != "bernoulli" and group.kind != "z1":
            parser.error("--base: indexed bases are only wired to the z1 walk")
        plan = ExperimentPlan(
            group=ns.group, law=ns.law, statistics=statistics,
            steps=ns.steps, reps=ns.reps, seed=ns.seed,
            horizon=ns.horizon, two_sided=ns.two_sided, base=ns.base,
            workers=ns.threads,
        )
        return RunConfig(subcommand="simulate", plan=plan, out=ns.out)

    if ns.subcommand == "analytic":
        group = get_group(ns.group)
        try:
            parse_law(ns.law, group)
        except (ValueError, OSError) as exc:
            parser.error("--law: %s" % exc)
        if ns.quantity != "gamma":
            if not ns.arg and ns.quantity != "green":
                parser.error("--arg: %s needs a group element" % ns.quantity)
            if ns.arg:
                try:
                    group.parse(ns.arg)
                except ValueError as exc:
                    parser.error("--arg: %s" % exc)
        return RunConfig(subcommand="analytic", group=ns.group, law=ns.law,
                         quantity=ns.quantity, arg=ns.arg)

    if ns.subcommand == "fit":
        text = ns.fit_range
        parts = text.split(":")
        if len(parts) != 2:
            parser.error("--range: expected <nmin>:<nmax>, got %r" % text)
        try:
            lo, hi = int(parts[0]), int(parts[1])
        except ValueError:
            parser.error("--range: expected integers, got %r" % text)
        if not 0 < lo < hi:
            parser.error("--range: need 0 < nmin < nmax, got %r" % text)
        return RunConfig(subcommand="fit", fit_in=ns.fit_in,
                         fit_statistic=ns.statistic, fit_range=(lo, hi))

    return RunConfig(subcommand="verify", tier=ns.tier, threads=ns.threads)


def emit(report, plan, path):
    """Write a report as CSV or JSON; the format follows the extension."""
    if path.endswith(".json"):
        payload = json.loads(report.to_json())
        payload["plan"] = plan.canonical()
        text = json.dumps(payload, indent=2, sort_keys=True) + "\n"
    else:
        text = report.to_csv()
    with open(path, "w") as handle:
        handle.write(text)


def _record(quantity, element, result):
    return ",".join([
        quantity,
        _field(element),
        _num(result.value),
        _num(result.error_estimate),
        result.method,
    ])


def _run_analytic(cfg):
    group = get_group(cfg.group)
    law = parse_law(cfg.law, group)
    q = cfg.quantity
    if q == "gamma":
        res = analytic.gamma_constant(law)
        return [_record("gamma", "", res)]
    if q == "green":
        g = group.parse(cfg.arg) if cfg.arg else group.identity()
        res = analytic.green(law, g)
        return [_record("green", group.format(g), res)]
    j = group.parse(cfg.arg)
    if q == "akernel":
        res = analytic.potential_kernel(law, j)
        return [_record("akernel", group.format(j), res)]
    if q == "taboo2":
        at_j, at_0 = analytic.two_point_taboo(law, j)
        return [
            _record("taboo2.j", group.format(j), at_j),
            _record("taboo2.0", group.format(group.identity()), at_0),
        ]
    at_c, at_d = analytic.hitting_constants(law, j)
    return [
        _record("hitconst.c", group.format(j), at_c),
        _record("hitconst.d", group.format(j), at_d),
    ]


def _run_fit(cfg):
    lo, hi = cfg.fit_range
    pairs = []
    elements = set()
    with open(cfg.fit_in, newline="") as handle:
        for row in csv.DictReader(handle):
            if row["statistic"] != cfg.fit_statistic:
                continue
            n = int(row["n"])
            if lo <= n <= hi:
                pairs.append((n, float(row["mean"])))
                elements.add(row["element"])
    if not pairs:
        raise ValueError(
            "no rows with statistic %r in [%d, %d]" % (cfg.fit_statistic, lo, hi)
        )
    if len(elements) > 1:
        raise ValueError(
            "statistic %r is ambiguous across elements %s"
            % (cfg.fit_statistic, sorted(elements))
        )
    fit = regular_variation_fit(pairs)
    return fit.line()


def main(argv=None):
    cfg = parse_args(sys.argv[1:] if argv is None else argv)

    if cfg.subcommand == "simulate":
        report = run_experiment(cfg.plan)
        try:
            emit(report, cfg.plan, cfg.out)
        except OSError as exc:
            print("error: cannot write %s: %s" % (cfg.out, exc), file=sys.stderr)
            return 1
        for failure in report.failures:
            print("warning: %s" % (failure,), file=sys.stderr)
        return 0

    if cfg.subcommand == "analytic":
        try:
            lines = _run_analytic(cfg)
        except ValueError as exc:
            print("error: %s" % exc, file=sys.stderr)
            return 1
        for line in lines:
            print(line)
        return 0

    if cfg.subcommand == "fit":
        try:
            line = _run_fit(cfg)
        except (OSError, ValueError) as exc:
            print("error: %s" % exc, file=sys.stderr)
            return 1
        print(line)
        return 0

    from walkrange.acceptance import run_suite

    ok = run_suite(cfg.tier, threads=cfg.threads, stream=sys.stdout)
    return 0 if ok else 1


if __name__ == "__main__":
    sys.exit(main())
