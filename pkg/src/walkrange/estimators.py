"""Ensemble Monte Carlo over range processes, and the statistical checks.

The experiment runner simulates independent trajectories, snapshots range
statistics at a geometric checkpoint schedule, and aggregates in fixed
trajectory order with compensated summation, so a report depends on the
plan alone and never on scheduling.  On top of it sit escape-probability
brackets, the two Folner routes and their verdict, the n/log^2(n) boundary
constant, regular-variation fits, taboo-decay boundedness, and variance
scans.
"""

import math
from fractions import Fraction
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from . import backend, taboo
from .cocycle import (
    BACKWARD,
    FORWARD,
    PURPOSE_ESCAPE,
    PURPOSE_MISC,
    PURPOSE_WALK,
    RotationBase,
    substream,
)
from .groups import (
    FreeGroup2,
    HeisenbergGroup,
    LatticeGroup,
    OverflowGuardError,
    get_group,
)
from .laws import parse_law
from .range_engine import BoundarySpec, RangeAccumulator, checkpoint_schedule
from .reporting import EstimateReport, StatRow, plan_hash

DEFAULT_SEED = 1729
F2_STOP_DISTANCE = 40


@dataclass
class ExperimentPlan:
    group: str
    law: str
    statistics: tuple = ("range",)
    steps: int = 10000
    reps: int = 100
    seed: int = DEFAULT_SEED
    horizon: int = None  # defaults to the largest checkpoint
    two_sided: bool = False
    base: str = "bernoulli"  # or "rotation:<theta>:<beta>:<x0|random>"
    checkpoint_start: int = 1000
    checkpoint_ratio: float = 1.5
    name: str = "sim"
    workers: int = 1

    def checkpoints(self):
        return checkpoint_schedule(
            self.steps, start=self.checkpoint_start, ratio=self.checkpoint_ratio
        )

    def canonical(self):
        """Everything the results depend on; the worker count is excluded."""
        return {
            "group": self.group,
            "law": self.law,
            "statistics": list(self.statistics),
            "steps": int(self.steps),
            "reps": int(self.reps),
            "seed": int(self.seed),
            "horizon": None if self.horizon is None else int(self.horizon),
            "two_sided": bool(self.two_sided),
            "base": self.base,
            "checkpoint_start": int(self.checkpoint_start),
            "checkpoint_ratio": float(self.checkpoint_ratio),
            "name": self.name,
        }


@dataclass
class FitResult:
    index: float
    uncertainty: float
    intercept: float
    residual: float
    n_range: tuple

    def line(self):
        return "%.17g,%.17g,%.17g,%.17g" % (
            self.index,
            self.uncertainty,
            self.intercept,
            self.residual,
        )


def _parse_statistics(group, statistics):
    """Map statistic tokens onto one BoundarySpec plus readout closures."""
    probes = []
    dirs = []
    want_boundary = False
    readouts = []
    for token in statistics:
        if token == "range":
            readouts.append(("range", "", "range", None))
        elif token == "boundary":
            want_boundary = True
            readouts.append(("boundary", "", "boundary", None))
        elif token.startswith("vboundary:"):
            want_boundary = True
            v = group.parse(token.split(":", 1)[1])
            if v not in dirs:
                dirs.append(v)
            readouts.append(("vboundary", group.format(v), "vboundary", v))
        elif token.startswith("folner:"):
            g = group.parse(token.split(":", 1)[1])
            if g not in probes:
                probes.append(g)
            readouts.append(("folner", group.format(g), "folner", g))
        else:
            raise ValueError(
                "unknown statistic %r (expected range, boundary, "
                "vboundary:<v>, or folner:<g>)" % token
            )
    spec = BoundarySpec(
        track_boundary=want_boundary,
        directions=tuple(dirs) if dirs else None,
        probes=tuple(probes),
    )
    return spec, readouts


def _parse_base(base_token, seed, trajectory):
    if base_token == "bernoulli":
        return None
    parts = base_token.split(":")
    if parts[0] != "rotation" or len(parts) != 4:
        raise ValueError(
            "unknown base %r (expected bernoulli or rotation:<theta>:<beta>:<x0|random>)"
            % base_token
        )
    def ratio(text):
        return Fraction(text) if "/" in text else float(text)

    theta, beta = ratio(parts[1]), ratio(parts[2])
    if parts[3] == "random":
        x0 = float(substream(seed, PURPOSE_MISC, trajectory, FORWARD).random())
    else:
        x0 = ratio(parts[3])
    return RotationBase(theta=theta, beta=beta, x0=x0)


def _lattice_increments(plan, law, trajectory):
    rot = _parse_base(plan.base, plan.seed, trajectory)
    if rot is not None:
        return rot.increments(plan.steps)
    rng = substream(plan.seed, PURPOSE_WALK, trajectory, FORWARD)
    return law.draw_increments(rng, plan.steps)

def _interleave_two_sided(fwd_incs, law, plan, trajectory):
    """Increment stream visiting S_1, S^-_1, S_2, S^-_2, ...

    Both endpoint families live in one abelian coordinate system, so the
    combined visit sequence is re-encoded as increments of a single
    fictitious walk; checkpoints double accordingly.
    """
    rng = substream(plan.seed, PURPOSE_WALK, trajectory, BACKWARD)
    bwd_incs = law.inverse_law().draw_increments(rng, plan.steps)
    f_pos = np.cumsum(fwd_incs, axis=0)
    b_pos = np.cumsum(bwd_incs, axis=0)
    n, d = f_pos.shape
    merged = np.empty((2 * n, d), dtype=np.int64)
    merged[0::2] = f_pos
    merged[1::2] = b_pos
    out = np.empty_like(merged)
    out[0] = merged[0]
    np.subtract(merged[1:], merged[:-1], out=out[1:])
    return out


def _run_lattice_trajectory(plan, law, group, spec, trajectory, checkpoints):
    dirs, probes = spec.resolve(group)
    gens = np.array(group.generators(), dtype=np.int64)
    dir_arr = np.array(dirs, dtype=np.int64).reshape(len(dirs), group.dim)
    probe_arr = np.array(probes, dtype=np.int64).reshape(len(probes), group.dim)
    incs = _lattice_increments(plan, law, trajectory)
    cks = np.asarray(checkpoints, dtype=np.int64)
    if plan.two_sided:
        incs = _interleave_two_sided(incs, law, plan, trajectory)
        cks = 2 * cks
    return backend.lattice_accumulate(
        np.ascontiguousarray(incs, dtype=np.int64),
        cks,
        gens,
        dir_arr,
        probe_arr,
        spec.track_boundary,
    ), dirs, probes


def _run_f2_trajectory(plan, law, group, spec, trajectory, checkpoints):
    dirs, probes = spec.resolve(group)
    rng = substream(plan.seed, PURPOSE_WALK, trajectory, FORWARD)
    idx = law.draw_increments(rng, plan.steps)
    pack = law.kernel_pack()
    probe_words = [np.array(p, dtype=np.int8) for p in probes]
    res = backend.f2_accumulate(
        idx,
        pack["offsets"],
        pack["letters"],
        np.asarray(checkpoints, dtype=np.int64),
        probe_words,
        spec.track_boundary,
    )
    # the kernel always reports all four letters, in letter order
    return res, tuple((i,) for i in range(4)), probes


def _run_generic_trajectory(plan, law, group, spec, trajectory, checkpoints):
    """Sequential group-multiply route: correct on any group, not fast."""
    rng = substream(plan.seed, PURPOSE_WALK, trajectory, FORWARD)
    elems = law.sample_elements(rng, plan.steps)
    acc = RangeAccumulator(group, spec)
    pos = group.identity()
    snaps = []
    targets = list(checkpoints)
    next_at = targets.pop(0)
    for k, x in enumerate(elems, start=1):
        pos = group.multiply(pos, x)
        acc.insert(pos)
        if k == next_at:
            snaps.append(acc.snapshot())
            next_at = targets.pop(0) if targets else None
    dirs, probes = spec.resolve(group)
    nk = len(snaps)
    range_size = np.array([s.range_size for s in snaps], dtype=np.int64)
    boundary = np.array(
        [s.boundary if s.boundary is not None else 0 for s in snaps],
        dtype=np.int64,
    )
    dir_counts = np.zeros((nk, len(dirs)), dtype=np.int64)
    probe_counts = np.zeros((nk, len(probes)), dtype=np.int64)
    for i, s in enumerate(snaps):
        for j, v in enumerate(dirs):
            dir_counts[i, j] = s.direction_counts[group.format(v)]
        for j, g in enumerate(probes):
            probe_counts[i, j] = s.probe_counts[group.format(g)]
    return (range_size, boundary, dir_counts, probe_counts), dirs, probes


def _trajectory_values(plan, law, group, spec, readouts, trajectory, checkpoints):
    """(len(checkpoints), len(readouts)) float matrix for one trajectory."""
    if isinstance(group, LatticeGroup):
        res, dirs, probes = _run_lattice_trajectory(
            plan, law, group, spec, trajectory, checkpoints
        )
    elif isinstance(group, FreeGroup2):
        res, dirs, probes = _run_f2_trajectory(
            plan, law, group, spec, trajectory, checkpoints
        )
    else:
        res, dirs, probes = _run_generic_trajectory(
            plan, law, group, spec, trajectory, checkpoints
        )
    range_size, boundary, dir_counts, probe_counts = res
    dir_index = {v: j for j, v in enumerate(dirs)}
    probe_index = {g: j for j, g in enumerate(probes)}
    out = np.empty((len(checkpoints), len(readouts)))
    for col, (kind, _el, _name, arg) in enumerate(readouts):
        if kind == "range":
            out[:, col] = range_size
        elif kind == "boundary":
            out[:, col] = boundary
        elif kind == "vboundary":
            out[:, col] = dir_counts[:, dir_index[arg]]
        else:
            j = probe_index[arg]
            jinv = probe_index[group.inverse(arg)]
            sym = probe_counts[:, j] + probe_counts[:, jinv]
            out[:, col] = sym / np.maximum(range_size, 1)
    return out


def run_experiment(plan):
    """Simulate the plan; aggregate per checkpoint and statistic."""
    group = get_group(plan.group)
    law = parse_law(plan.law, group)
    if plan.two_sided and not isinstance(group, LatticeGroup):
        raise ValueError("--two-sided interleaving is defined on Z^d groups only")
    if plan.base != "bernoulli" and plan.group != "z1":
        raise ValueError("rotation-base plans run on the group z1")
    spec, readouts = _parse_statistics(group, plan.statistics)
    checkpoints = plan.checkpoints()
    results = [None] * plan.reps
    failures = []

    def work(r):
        try:
            results[r] = _trajectory_values(
                plan, law, group, spec, readouts, r, checkpoints
            )
        except (OverflowGuardError, MemoryError) as exc:
            results[r] = None
            failures.append("trajectory %d: %s" % (r, exc))

    if plan.workers > 1:
        with ThreadPoolExecutor(max_workers=plan.workers) as pool:
            list(pool.map(work, range(plan.reps)))
    else:
        for r in range(plan.reps):
            work(r)

    ok = [r for r in range(plan.reps) if results[r] is not None]
    failures.sort()
    report = EstimateReport(plan_hash=plan_hash(plan.canonical()), seed=plan.seed)
    report.failures = failures
    for col, (kind, element, name, _arg) in enumerate(readouts):
        for i, n in enumerate(checkpoints):
            vals = [float(results[r][i, col]) for r in ok]
            reps = len(vals)
            if reps == 0:
                continue
            mean = math.fsum(vals) / reps
            if min(vals) == max(vals):
                # constant samples get an exact mean and zero spread; the
                # fsum route can otherwise round the mean by one ulp
                mean, var = vals[0], 0.0
            elif reps > 1:
                var = math.fsum((v - mean) ** 2 for v in vals) / (reps - 1)
            else:
                var = 0.0
            stderr = math.sqrt(var / reps) if reps > 0 else 0.0
            report.rows.append(
                StatRow(
                    experiment=plan.name,
                    group=plan.group,
                    law=plan.law,
                    n=int(n),
                    statistic=name,
                    element=element,
                    mean=mean,
                    variance=var,
                    stderr=stderr,
                    reps=reps,
                    seed=plan.seed,
                )
            )
    return report


def _experiment_matrix(plan):
    """Raw per-trajectory values: (reps, checkpoints, readouts) array."""
    group = get_group(plan.group)
    law = parse_law(plan.law, group)
    spec, readouts = _parse_statistics(group, plan.statistics)
    checkpoints = plan.checkpoints()
    mats = []
    for r in range(plan.reps):
        mats.append(
            _trajectory_values(plan, law, group, spec, readouts, r, checkpoints)
        )
    return np.stack(mats), checkpoints, readouts


# ---------------------------------------------------------------------------
# escape probabilities


def _lattice_escape(law, targets, horizon, reps, seed, workers=1):
    """hit flags (reps, len(targets)): True when the target was ever hit."""
    d = law.group.dim
    tarr = np.array(targets, dtype=np.int64).reshape(len(targets), d)
    batch = min(reps, 1024)
    chunk_steps = 4096
    hits = np.zeros((reps, len(targets)), dtype=bool)

    def run_batch(lo):
        hi = min(reps, lo + batch)
        b = hi - lo
        pos = np.zeros((b, d), dtype=np.int64)
        hit_step = np.full((b, len(targets)), -1, dtype=np.int64)
        rngs = [substream(seed, PURPOSE_ESCAPE, r, FORWARD) for r in range(lo, hi)]
        done = 0
        while done < horizon:
            t = min(chunk_steps, horizon - done)
            incs = np.empty((b, t, d), dtype=np.int64)
            for i, rng in enumerate(rngs):
                incs[i] = law.draw_increments(rng, t)
            backend.lattice_escape_chunk(incs, pos, tarr, hit_step, done)
            done += t
        hits[lo:hi] = hit_step >= 0

    starts = list(range(0, reps, batch))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(run_batch, starts))
    else:
        for lo in starts:
            run_batch(lo)
    return hits


def _f2_escape(law, targets, horizon, reps, seed, stop_distance=F2_STOP_DISTANCE):
    """hit flags for word targets; walks are abandoned once the tree
    distance to the unfinished target exceeds stop_distance."""
    pack = law.kernel_pack()
    hits = np.zeros((reps, len(targets)), dtype=bool)
    chunk_steps = 2048
    for r in range(reps):
        rng = substream(seed, PURPOSE_ESCAPE, r, FORWARD)
        states = [
            backend.f2_escape_state(np.array(t, dtype=np.int8)) for t in targets
        ]
        done = 0
        while done < horizon and not all(s.done for s in states):
            idx = law.draw_increments(rng, min(chunk_steps, horizon - done))
            for s in states:
                if not s.done:
                    backend.f2_escape_chunk(
                        s, idx, pack["offsets"], pack["letters"], stop_distance
                    )
            done += idx.shape[0]
        for j, s in enumerate(states):
            hits[r, j] = s.hit_step >= 0
    return hits


@dataclass
class EscapeBracket:
    low: float
    high: float
    point: float
    stderr: float
    tail: float = None  # post-horizon mass estimate; None when unavailable


def escape_probability(law, targets, horizon, reps, seed=DEFAULT_SEED, workers=1):
    """Per-target bracket [low, high] for q(g) = P(S_n never equals g).

    The point estimate is the avoidance frequency up to the horizon; the
    lower edge subtracts the analytic tail estimate for the mass of hits
    after the horizon when one is available.
    """
    group = law.group
    diag = law.diagnose()
    if diag.transient is False:
        raise ValueError("escape probabilities degenerate for recurrent laws")
    if isinstance(group, LatticeGroup):
        if len(law.support) == 1:
            # deterministic walk: escape is a statement about the single ray
            out = []
            atom = law.support[0]
            for g in targets:
                on_ray = False
                ks = [g[i] // atom[i] for i in range(group.dim) if atom[i] != 0]
                if ks and ks[0] >= 1:
                    k = ks[0]
                    on_ray = all(g[i] == k * atom[i] for i in range(group.dim))
                q = 0.0 if on_ray else 1.0
                out.append(EscapeBracket(q, q, q, 0.0, 0.0))
            return out
        hits = _lattice_escape(law, targets, horizon, reps, seed, workers)
    elif isinstance(group, FreeGroup2):
        hits = _f2_escape(law, targets, horizon, reps, seed)
    else:
        raise ValueError("escape simulation supports Z^d and the free group")
    out = []
    for j, g in enumerate(targets):
        qhat = 1.0 - float(hits[:, j].mean())
        stderr = math.sqrt(max(qhat * (1.0 - qhat), 1e-12) / reps)
        tail = _escape_tail(law, g, horizon)
        low = max(0.0, qhat - (tail if tail is not None else 0.0))
        out.append(EscapeBracket(low, qhat, qhat, stderr, tail))
    return out


def _escape_tail(law, g, horizon):
    if isinstance(law.group, LatticeGroup):
        try:
            from .analytic import return_tail

            return return_tail(law, g, horizon).value
        except ValueError:
            return None
    # free group: the escape kernel abandons walks at tree distance
    # F2_STOP_DISTANCE; for the simple law the abandoned walk returns to
    # the unfinished target with probability at most (1/3)^(D - |g| - 1).
    if getattr(law, "token", "") == "srw":
        return 3.0 ** -(F2_STOP_DISTANCE - len(tuple(g)) - 1)
    return None


# ---------------------------------------------------------------------------
# Folner limits


@dataclass
class FolnerReport:
    limit_a: float = None
    err_a: float = None
    limit_b: float = None
    err_b: float = None
    verdict: str = "inconclusive"
    agree: bool = None
    ratios: list = field(default_factory=list)


def _verdict_from_ratios(ns, ratios):
    """Classify the tail behavior of the symmetric-difference ratios.

    A genuinely positive limit shows a flat, clearly nonzero tail; decay
    of every shipped kind (power law or 1/log n) shows a steady negative
    log-log slope with the top checkpoint visibly below the median one.
    """
    if len(ratios) < 4:
        return "inconclusive"
    tail = ratios[-3:]
    top = ratios[-1]
    med = sorted(ratios)[len(ratios) // 2]
    lo, hi = min(tail), max(tail)
    spread = (hi - lo) / hi if hi > 0 else 0.0
    logs_n = np.log(np.asarray(ns, dtype=np.float64))
    pos = np.asarray(ratios) > 0
    if pos.sum() >= 4:
        slope = np.polyfit(logs_n[pos], np.log(np.asarray(ratios)[pos]), 1)[0]
    else:
        slope = 0.0
    if spread <= 0.20 and top > 0.02 and slope > -0.02:
        return "not-folner"
    if top == 0.0 or (slope <= -0.04 and top <= 0.9 * med):
        return "folner-consistent"
    return "inconclusive"


def folner_limit(law, probe, plan, path_a_reps=20000):
    """Both routes to lim |R triangle R g| / |R| and a verdict.

    Path A (transient laws): the product formula combining backward
    avoidance of g and g^-1 with forward avoidance conditioned on
    no-return.  Path B: the tracked ratio at the checkpoints.  The verdict
    comes from the path-B tail; when both paths run they must agree within
    combined uncertainty.
    """
    group = law.group
    plan = replace(
        plan, statistics=("folner:%s" % group.format(probe),), name="folner"
    )
    report = run_experiment(plan)
    series = report.series("folner", group.format(probe))
    ns = [n for n, _ in series]
    ratios = [v for _, v in series]
    out = FolnerReport(ratios=list(zip(ns, ratios)))
    out.limit_b = ratios[-1]
    top_row = report.get(ns[-1], "folner", group.format(probe))
    out.err_b = top_row.stderr
    out.verdict = _verdict_from_ratios(ns, ratios)

    diag = law.diagnose()
    if diag.transient:
        ginv = group.inverse(probe)
        horizon = plan.horizon or ns[-1]
        ida = group.identity()
        fwd = _escape_hits_for(law, [ida, probe, ginv], horizon, path_a_reps, plan.seed)
        bwd = _escape_hits_for(
            law.inverse_law(), [probe, ginv], horizon, path_a_reps, plan.seed + 1
        )
        term = 0.0
        var = 0.0
        for j, g in enumerate((probe, ginv)):
            b_avoid = 1.0 - float(bwd[:, j].mean())
            no_ret = ~fwd[:, 0]
            denom = int(no_ret.sum())
            num = int((no_ret & ~fwd[:, j + 1]).sum())
            cond = num / denom if denom else 0.0
            term += b_avoid * cond
            vb = b_avoid * (1 - b_avoid) / path_a_reps
            vc = cond * (1 - cond) / max(denom, 1)
            var += cond * cond * vb + b_avoid * b_avoid * vc
        out.limit_a = term
        out.err_a = math.sqrt(var)
        combined = 3.0 * (out.err_a + out.err_b) + 0.02
        out.agree = abs(out.limit_a - out.limit_b) <= combined
    return out


def _escape_hits_for(law, targets, horizon, reps, seed):
    group = law.group
    if isinstance(group, LatticeGroup):
        if len(law.support) == 1:
            atom = law.support[0]
            hits = np.zeros((reps, len(targets)), dtype=bool)
            for j, g in enumerate(targets):
                ks = [g[i] // atom[i] for i in range(group.dim) if atom[i] != 0]
                if ks and ks[0] >= 1 and all(
                    g[i] == ks[0] * atom[i] for i in range(group.dim)
                ):
                    hits[:, j] = True
                # the identity target is never re-hit by a deterministic ray
            return hits
        return _lattice_escape(law, targets, horizon, reps, seed)
    if isinstance(group, FreeGroup2):
        return _f2_escape(law, targets, horizon, reps, seed)
    raise ValueError("path A needs Z^d or the free group")


# ---------------------------------------------------------------------------
# boundary constant, fits, taboo decay, variance scan


def _require_log_class(law):
    diag = law.diagnose()
    if diag.transient:
        raise ValueError("the n/log^2 n boundary scaling needs a recurrent law")
    if diag.local_class not in ("a1", "a2"):
        raise ValueError(
            "boundary-constant scaling holds for finite-variance planar laws "
            "or symmetric Cauchy-type laws on Z"
        )


def boundary_constant(plan):
    """C-hat = mean |dR(n)| log^2(n) / n at the top checkpoint, with drift."""
    group = get_group(plan.group)
    law = parse_law(plan.law, group)
    _require_log_class(law)
    if "boundary" not in plan.statistics:
        plan = replace(plan, statistics=("boundary",) + tuple(plan.statistics))
    report = run_experiment(plan)
    series = report.series("boundary")
    cs = [(n, mean * math.log(n) ** 2 / n) for n, mean in series]
    per_dir = {}
    for token in plan.statistics:
        if token.startswith("vboundary:"):
            el = get_group(plan.group).format(group.parse(token.split(":", 1)[1]))
            sd = report.series("vboundary", el)
            per_dir[el] = sd[-1][1] * math.log(sd[-1][0]) ** 2 / sd[-1][0]
    last3 = [c for _, c in cs[-3:]]
    drift = (max(last3) - min(last3)) / max(last3) if len(last3) == 3 else None
    n_top, c_top = cs[-1]
    row = report.get(n_top, "boundary")
    c_err = row.stderr * math.log(n_top) ** 2 / n_top
    return {
        "constant": c_top,
        "stderr": c_err,
        "drift": drift,
        "series": cs,
        "per_direction": per_dir,
        "report": report,
    }


def regular_variation_fit(series):
    """Log-log least squares for a regularly varying sequence."""
    pts = [(int(n), float(v)) for n, v in series]
    if len(pts) < 5:
        raise ValueError("need at least 5 log-spaced points to fit an index")
    if any(v <= 0 for _, v in pts):
        raise ValueError("regular-variation fits need positive values")
    x = np.log([n for n, _ in pts])
    y = np.log([v for _, v in pts])
    coef, res = np.polyfit(x, y, 1, full=True)[:2]
    slope, intercept = float(coef[0]), float(coef[1])
    dof = max(len(pts) - 2, 1)
    sse = float(res[0]) if len(res) else 0.0
    sx = float(np.sum((x - x.mean()) ** 2))
    se = math.sqrt(sse / dof / sx) if sx > 0 else 0.0
    half = len(pts) // 2
    slope2 = float(np.polyfit(x[half:], y[half:], 1)[0])
    uncertainty = max(2.0 * se, 1.25 * abs(slope2 - slope), 1e-9)
    return FitResult(
        index=slope,
        uncertainty=uncertainty,
        intercept=intercept,
        residual=math.sqrt(sse),
        n_range=(pts[0][0], pts[-1][0]),
    )


def taboo_decay_check(law, taboo_set, x, y, n_grid):
    """Boundedness of n log^2(n) Q-hat over the grid, via the killed walk."""
    diag = law.diagnose()
    if diag.transient:
        raise ValueError("taboo decay checks need a recurrent law")
    if diag.local_class not in ("a1", "a2"):
        raise ValueError("taboo decay scaling needs an (A1)- or (A2)-class law")
    n_grid = sorted(int(n) for n in n_grid)
    seq = taboo.taboo_sequence(law, taboo_set, x, y, n_grid[-1])
    values = [(n, n * math.log(n) ** 2 * seq[n]) for n in n_grid]
    nz = [v for _, v in values if v > 0]
    sup = max(v for _, v in values)
    med = sorted(nz)[len(nz) // 2] if nz else 0.0
    last = next((v for n, v in reversed(values) if v > 0), 0.0)
    bounded = bool(last <= 2.0 * med) if med > 0 else True
    return {
        "bounded": bounded,
        "sup": sup,
        "median": med,
        "values": values,
    }


def variance_scan(plan):
    """Var(|dR(n)|) per checkpoint plus the log^5-normalized diagnostic."""
    if plan.reps < 200:
        raise ValueError("variance scans need at least 200 replications")
    group = get_group(plan.group)
    law = parse_law(plan.law, group)
    _require_log_class(law)
    if "boundary" not in plan.statistics:
        plan = replace(plan, statistics=("boundary",))
    mat, checkpoints, readouts = _experiment_matrix(plan)
    col = next(i for i, r in enumerate(readouts) if r[2] == "boundary")
    rows = []
    for i, n in enumerate(checkpoints):
        vals = mat[:, i, col]
        mean = float(vals.mean())
        var = float(vals.var(ddof=1))
        entry = {"n": int(n), "mean": mean, "variance": var}
        if n >= 16:
            entry["normalized"] = (
                var * math.log(n) ** 5 / (n * n * math.log(math.log(n)))
            )
        dev = np.abs(vals - mean) > 0.5 * mean
        entry["cheb_freq"] = float(dev.mean())
        rows.append(entry)
    normed = [(r["n"], r["normalized"]) for r in rows if "normalized" in r]
    diag = None
    if len(normed) >= 3:
        vals = [v for _, v in normed]
        med = sorted(vals)[len(vals) // 2]
        diag = {
            "last": vals[-1],
            "median": med,
            "non_diverging": vals[-1] <= 2.0 * med,
        }
    eps = 0.5
    cheb = [
        (r["n"], r["cheb_freq"] * eps * eps * math.log(r["n"]) / math.log(math.log(r["n"])))
        for r in rows
        if r["n"] >= 16
    ]
    fitted = max((v for _, v in cheb), default=0.0)
    return {
        "rows": rows,
        "diagnostic": diag,
        "cheb_constant": fitted,
        "cheb_eps": eps,
    }
