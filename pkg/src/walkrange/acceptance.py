"""Acceptance suite: every shipped claim checked at its stated tolerance.

Each criterion is a function returning check results; `run_suite` drives
them and prints one line per check.  The quick tier runs every criterion
that finishes in about a minute at its full stated parameters and marks
the rest as skipped; the full tier runs everything.
"""

import math
import os
import sys
import tempfile
import time
from dataclasses import dataclass, replace

import numpy as np

from walkrange import analytic
from walkrange.estimators import (
    ExperimentPlan,
    _experiment_matrix,
    _verdict_from_ratios,
    boundary_constant,
    escape_probability,
    folner_limit,
    regular_variation_fit,
    run_experiment,
    variance_scan,
)
from walkrange.groups import get_group
from walkrange.laws import parse_law
from walkrange.range_engine import BoundarySpec, RangeAccumulator, brute_force_counters

GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0

# Floor for the per-trajectory ratio |R(n)| / n^(1/alpha - 0.05) at the top
# checkpoint.  Calibration runs put the 1st percentile near 1.7 and the
# observed minimum near 1.5, so 0.5 tests the divergence direction with a
# wide margin while staying a genuinely positive threshold.
RANGE_GROWTH_FLOOR = 0.5


@dataclass
class CheckResult:
    criterion: int
    name: str
    status: str  # "pass" | "fail" | "skip"
    measured: str = ""

    def line(self):
        mark = {"pass": "pass", "fail": "FAIL", "skip": "SKIP"}[self.status]
        return "[%2d] %-44s %s  %s" % (self.criterion, self.name, mark, self.measured)


def _check(criterion, name, ok, measured):
    return CheckResult(criterion, name, "pass" if ok else "fail", measured)


class SuiteContext:
    """Shared ensembles and scratch files for one suite run."""

    def __init__(self, threads=1):
        self.threads = max(1, int(threads))
        self._cache = {}
        self.law_dir = os.path.join(tempfile.gettempdir(), "walkrange-acceptance")
        os.makedirs(self.law_dir, exist_ok=True)
        self._write_law("det1.atoms", "1 1\n")
        self._write_law("drift21.atoms", "2 1/2\n-1 1/2\n")

    def _write_law(self, name, text):
        path = os.path.join(self.law_dir, name)
        with open(path, "w") as handle:
            handle.write(text)

    def law_path(self, name):
        return os.path.join(self.law_dir, name)

    def cached(self, key, builder):
        if key not in self._cache:
            self._cache[key] = builder()
        return self._cache[key]

    def planar_boundary(self):
        """One planar walk ensemble reused by the boundary and Folner checks."""
        plan = ExperimentPlan(
            group="z2",
            law="srw",
            statistics=("range", "boundary", "folner:1,0"),
            steps=10**6,
            reps=200,
            checkpoint_start=10**4,
            name="accept-z2",
            workers=self.threads,
        )
        return self.cached("planar", lambda: boundary_constant(plan))

    def heavy_tail_matrix(self):
        """Raw per-trajectory statistics for the zeta(alpha=1.5) walk."""
        plan = ExperimentPlan(
            group="z1",
            law="zeta:1.5",
            statistics=("range", "boundary", "vboundary:1"),
            steps=10**6,
            reps=500,
            checkpoint_start=10**3,
            name="accept-zeta",
            workers=self.threads,
        )
        return self.cached("zeta", lambda: _experiment_matrix(plan))


def _criterion_1(ctx):
    """Transient range law: mean |R(n)|/n against 1/G(id) by quadrature."""
    law = parse_law("srw", get_group("z3"))
    target = analytic.escape_from_green(law).value
    plan = ExperimentPlan(
        group="z3", law="srw", statistics=("range",), steps=10**6, reps=100,
        checkpoint_start=10**6, name="accept-z3", workers=ctx.threads,
    )
    report = run_experiment(plan)
    row = report.get(10**6, "range")
    ratio = row.mean / 10**6
    ok = abs(ratio - target) <= 0.005
    return [
        _check(1, "transient range density", ok,
               "|R|/n = %.6f vs 1/G(id) = %.6f (tol 0.005)" % (ratio, target)),
    ]


def _criterion_2(ctx):
    """Green values against escape frequencies on the three-dimensional walk."""
    group = get_group("z3")
    law = parse_law("srw", group)
    g0 = analytic.green(law, group.identity())
    g1 = analytic.green(law, (1, 0, 0))
    brackets = escape_probability(
        law, [group.identity(), (1, 0, 0)], horizon=10**5, reps=10**5,
        workers=ctx.threads,
    )
    b_id, b_e1 = brackets

    def widen(b):
        return (b.low - 2.0 * b.stderr, b.high + 2.0 * b.stderr)

    id_lo, id_hi = widen(b_id)
    e1_lo, e1_hi = widen(b_e1)

    # G(e1) = (1 - q(e1)) / q(id): evaluate the identity over the brackets
    lo = (1.0 - e1_hi) / id_hi
    hi = (1.0 - e1_lo) / id_lo
    dist = max(lo - g1.value, g1.value - hi, 0.0)
    ok1 = dist <= 0.01 * g1.value
    # G(id) = 1 / q(id)
    lo0, hi0 = 1.0 / id_hi, 1.0 / id_lo
    dist0 = max(lo0 - g0.value, g0.value - hi0, 0.0)
    ok0 = dist0 <= 0.01 * g0.value
    return [
        _check(2, "Green(e1) vs escape ratio", ok1,
               "G=%.5f bracket [%.5f, %.5f]" % (g1.value, lo, hi)),
        _check(2, "Green(id) vs 1/escape", ok0,
               "G=%.5f bracket [%.5f, %.5f]" % (g0.value, lo0, hi0)),
    ]


def _criterion_3(ctx):
    result = ctx.planar_boundary()
    c_hat = result["constant"]
    drift = result["drift"]
    ok_c = 4.93 <= c_hat <= 19.74
    ok_d = drift is not None and drift < 0.10
    return [
        _check(3, "planar boundary constant bracket", ok_c,
               "C-hat = %.3f, want within [4.93, 19.74]" % c_hat),
        _check(3, "planar boundary constant drift", ok_d,
               "last-three drift = %.2f%% (tol 10%%)" % (100.0 * (drift or 1.0))),
    ]


def _criterion_4(ctx):
    plan = ExperimentPlan(
        group="z1", law="srw", statistics=("range",), steps=10**6, reps=2,
        base="rotation:%.17g:1/2:0" % GOLDEN, checkpoint_start=10**6,
        name="accept-rotation",
    )
    report = run_experiment(plan)
    row = report.get(10**6, "range")
    ratio = row.mean / 10**6
    ok = abs(ratio - 0.5) <= 1e-3 and row.variance == 0.0
    return [
        _check(4, "rotation cocycle range density", ok,
               "|R|/n = %.7f vs 1/2 (tol 1e-3), var = %g" % (ratio, row.variance)),
    ]


def _criterion_5(ctx):
    group = get_group("z1")
    out = []

    det_plan = ExperimentPlan(
        group="z1", law="atoms:" + ctx.law_path("det1.atoms"),
        statistics=("folner:1",), steps=10**4, reps=3, checkpoint_start=100,
        name="accept-det",
    )
    det_law = parse_law(det_plan.law, group)
    det = folner_limit(det_law, (1,), det_plan)
    # exactness is a per-trajectory claim; ensemble averaging may move
    # the last bit, so check the raw values
    mat, cks, _ = _experiment_matrix(det_plan)
    exact = all(
        mat[r, i, 0] == 2.0 / n
        for r in range(mat.shape[0])
        for i, n in enumerate(cks)
    )
    ok_det = det.verdict == "folner-consistent" and exact
    out.append(_check(5, "deterministic law ratio 2/n", ok_det,
                      "verdict = %s, per-trajectory ratios exact: %s" % (det.verdict, exact)))

    drift_plan = ExperimentPlan(
        group="z1", law="atoms:" + ctx.law_path("drift21.atoms"),
        statistics=("folner:1",), steps=10**5, reps=60, checkpoint_start=10**3,
        name="accept-drift", workers=ctx.threads,
    )
    drift_law = parse_law(drift_plan.law, group)
    fr = folner_limit(drift_law, (1,), drift_plan)
    ok_dr = fr.verdict == "not-folner" and bool(fr.agree)
    out.append(_check(5, "drift law positive limit, both routes", ok_dr,
                      "A = %.4f+-%.4f, B = %.4f+-%.4f, verdict = %s"
                      % (fr.limit_a, fr.err_a, fr.limit_b, fr.err_b, fr.verdict)))
    return out


def _criterion_6(ctx):
    group = get_group("f2")
    law = parse_law("srw", group)
    a = group.parse("a")

    plan = ExperimentPlan(
        group="f2", law="srw", statistics=("folner:a",), steps=10**5, reps=200,
        checkpoint_start=10**3, name="accept-f2", workers=ctx.threads,
    )
    fr = folner_limit(law, a, plan)
    ok_v = fr.verdict == "not-folner" and fr.limit_b > 0.1
    out = [
        _check(6, "free group verdict and limit", ok_v,
               "verdict = %s, limit = %.4f (want > 0.1)" % (fr.verdict, fr.limit_b)),
    ]

    brackets = escape_probability(
        law, [group.identity(), a], horizon=10**5, reps=30000, workers=ctx.threads
    )
    for name, br in zip(("id", "a"), brackets):
        ok = abs(br.point - 2.0 / 3.0) <= 0.01
        out.append(_check(6, "free group escape q(%s)" % name, ok,
                          "q = %.4f vs 2/3 (tol 0.01)" % br.point))
    return out


def _criterion_7(ctx):
    result = ctx.planar_boundary()
    report = result["report"]
    series = [
        (n, mean) for n, mean in report.series("folner", "1,0") if n >= 10**4
    ]
    scaled = [r * math.log(n) for n, r in series]
    band = max(scaled) / min(scaled) if min(scaled) > 0 else float("inf")
    verdict = _verdict_from_ratios([n for n, _ in series], [r for _, r in series])
    ok_band = band <= 3.0
    ok_v = verdict == "folner-consistent"
    return [
        _check(7, "planar ratio honors the log decay band", ok_band,
               "max/min of ratio*log n = %.3f (tol 3)" % band),
        _check(7, "planar verdict", ok_v, "verdict = %s" % verdict),
    ]


def _criterion_8(ctx):
    plan = ExperimentPlan(
        group="z1", law="zeta:1.5", statistics=("range",), steps=10**6,
        reps=10**4, checkpoint_start=10**3, name="accept-rv", workers=ctx.threads,
    )
    report = run_experiment(plan)
    series = [(n, mean / n) for n, mean in report.series("range")]
    fit = regular_variation_fit(series)
    ok = abs(fit.index + 1.0 / 3.0) <= 0.05
    return [
        _check(8, "heavy-tail density index", ok,
               "index = %.4f vs -1/3 (tol 0.05)" % fit.index),
    ]


def _criterion_9(ctx):
    mat, cks, readouts = ctx.heavy_tail_matrix()
    cols = {r[2]: i for i, r in enumerate(readouts)}
    ns = np.asarray(cks, dtype=np.float64)
    rng_mean = mat[:, :, cols["range"]].mean(axis=0)
    bd_mean = mat[:, :, cols["boundary"]].mean(axis=0)
    vb_mean = mat[:, :, cols["vboundary"]].mean(axis=0)
    alpha = 1.5

    fit = regular_variation_fit(list(zip(cks, bd_mean / rng_mean)))
    ok_fit = fit.index <= -1.0 / 3.0 + 0.1
    out = [
        _check(9, "boundary fraction decay exponent", ok_fit,
               "index = %.4f (tol <= %.4f)" % (fit.index, -1.0 / 3.0 + 0.1)),
    ]

    floor_pow = 1.0 / alpha - 0.05
    final = mat[:, -1, cols["range"]] / ns[-1] ** floor_pow
    frac = float((final > RANGE_GROWTH_FLOOR).mean())
    ok_floor = frac >= 0.99
    out.append(_check(9, "range growth floor per trajectory", ok_floor,
                      "%.1f%% of %d trajectories above %.2f (want >= 99%%)"
                      % (100.0 * frac, mat.shape[0], RANGE_GROWTH_FLOOR)))

    grow_pow = 2.0 / alpha - 1.0 + 0.1
    vfit = regular_variation_fit(list(zip(cks, vb_mean)))
    coeffs = vb_mean[-3:] / ns[-3:] ** grow_pow
    spread = float(coeffs.max() / coeffs.min())
    ok_grow = vfit.index <= grow_pow and spread <= 1.5
    out.append(_check(9, "fresh-translate growth cap", ok_grow,
                      "index = %.4f (cap %.4f), coefficient spread = %.3f"
                      % (vfit.index, grow_pow, spread)))
    return out


def _criterion_10(ctx):
    plan = ExperimentPlan(
        group="z2", law="srw", statistics=("boundary",), steps=10**6, reps=500,
        checkpoint_start=10**4, name="accept-var", workers=ctx.threads,
    )
    scan = variance_scan(plan)
    diag = scan["diagnostic"]
    ok = bool(diag and diag["non_diverging"])
    return [
        _check(10, "normalized boundary variance bounded", ok,
               "last = %.3f vs 2 x median = %.3f"
               % (diag["last"], 2.0 * diag["median"]) if diag else "no diagnostic"),
    ]


def _criterion_11(ctx):
    law = parse_law("srw", get_group("z3"))
    vals = [analytic.green(law, (k, 0, 0)).value for k in range(1, 21)]
    decreasing = all(b < a for a, b in zip(vals, vals[1:]))
    ok_far = vals[19] < vals[0] / 5.0
    return [
        _check(11, "axis Green values strictly decreasing", decreasing,
               "G(1)=%.5f ... G(20)=%.6f" % (vals[0], vals[19])),
        _check(11, "far Green value small", ok_far,
               "G(20) = %.6f < G(1)/5 = %.6f" % (vals[19], vals[0] / 5.0)),
    ]


def _criterion_12(ctx):
    out = []
    rng = np.random.default_rng(20260822)
    checkpoints = (250, 500, 1000)

    mismatches = 0
    trajectories = 0
    for token, count in (("z2", 34), ("f2", 33), ("heis", 33)):
        group = get_group(token)
        law = parse_law("srw", group)
        probe = group.generators()[0]
        spec = BoundarySpec(probes=(probe,))
        for _ in range(count):
            elems = law.sample_elements(rng, 1000)
            acc = RangeAccumulator(group, spec)
            pos = group.identity()
            endpoints = []
            trajectories += 1
            next_idx = 0
            for k, x in enumerate(elems, start=1):
                pos = group.multiply(pos, x)
                acc.insert(pos)
                endpoints.append(pos)
                if next_idx < len(checkpoints) and k == checkpoints[next_idx]:
                    next_idx += 1
                    fast = acc.snapshot()
                    slow = brute_force_counters(group, endpoints, spec)
                    same = (
                        fast.range_size == slow.range_size
                        and fast.boundary == slow.boundary
                        and fast.probe_counts == slow.probe_counts
                        and fast.direction_counts == slow.direction_counts
                    )
                    if not same:
                        mismatches += 1
    out.append(_check(12, "incremental counters match brute force", mismatches == 0,
                      "%d mismatches over %d trajectories" % (mismatches, trajectories)))

    bad_axioms = 0
    for token in ("z2", "f2", "heis"):
        group = get_group(token)
        gens = list(group.generators()) + [
            group.inverse(g) for g in group.generators()
        ]
        e = group.identity()

        def word():
            length = int(rng.integers(0, 9))
            w = e
            for _ in range(length):
                w = group.multiply(w, gens[int(rng.integers(0, len(gens)))])
            return w

        for _ in range(3334):
            a, b, c = word(), word(), word()
            assoc = group.multiply(group.multiply(a, b), c) == group.multiply(
                a, group.multiply(b, c)
            )
            unit = group.multiply(a, e) == a and group.multiply(e, a) == a
            inv = group.multiply(a, group.inverse(a)) == e
            if not (assoc and unit and inv):
                bad_axioms += 1
    out.append(_check(12, "group axioms on random triples", bad_axioms == 0,
                      "%d violations over 10002 triples" % bad_axioms))

    base = ExperimentPlan(
        group="z3", law="srw", statistics=("range", "boundary", "folner:1,0,0"),
        steps=10**5, reps=20, checkpoint_start=10**4, name="accept-workers",
    )
    texts = set()
    for workers in (1, 2, 5):
        report = run_experiment(replace(base, workers=workers))
        texts.add(report.to_csv())
    out.append(_check(12, "reports identical across worker counts", len(texts) == 1,
                      "%d distinct outputs from worker counts 1, 2, 5" % len(texts)))
    return out


@dataclass
class Criterion:
    number: int
    name: str
    run: object
    quick: bool


CRITERIA = (
    Criterion(1, "transient range density", _criterion_1, True),
    Criterion(2, "Green vs escape identity", _criterion_2, False),
    Criterion(3, "planar boundary constant", _criterion_3, True),
    Criterion(4, "rotation cocycle range", _criterion_4, True),
    Criterion(5, "Folner dichotomy on the line", _criterion_5, True),
    Criterion(6, "free group non-amenability probes", _criterion_6, True),
    Criterion(7, "planar Folner consistency", _criterion_7, True),
    Criterion(8, "heavy-tail density index", _criterion_8, False),
    Criterion(9, "heavy-tail boundary decay", _criterion_9, False),
    Criterion(10, "planar variance scaling", _criterion_10, False),
    Criterion(11, "Green decay along an axis", _criterion_11, True),
    Criterion(12, "engine correctness properties", _criterion_12, True),
)


def run_criterion(number, ctx):
    for crit in CRITERIA:
        if crit.number == number:
            return crit.run(ctx)
    raise ValueError("no criterion numbered %r" % number)


def run_suite(tier, threads=1, stream=sys.stdout):
    if tier not in ("quick", "full"):
        raise ValueError("tier must be quick or full, got %r" % tier)
    ctx = SuiteContext(threads=threads)
    results = []
    print("acceptance suite, tier = %s" % tier, file=stream, flush=True)
    for crit in CRITERIA:
        if tier == "quick" and not crit.quick:
            res = [CheckResult(crit.number, crit.name, "skip",
                               "heavy at stated parameters; use --tier full")]
        else:
            started = time.time()
            res = crit.run(ctx)
            elapsed = time.time() - started
            res[-1].measured += "  (%.1fs)" % elapsed
        for r in res:
            print(r.line(), file=stream, flush=True)
        results.extend(res)
    failed = sum(1 for r in results if r.status == "fail")
    passed = sum(1 for r in results if r.status == "pass")
    skipped = sum(1 for r in results if r.status == "skip")
    print("summary: %d passed, %d failed, %d skipped"
          % (passed, failed, skipped), file=stream, flush=True)
    return failed == 0
