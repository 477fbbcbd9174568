"""Report containers and deterministic emission.

A report is a pure function of the plan that produced it: rows are keyed by
(checkpoint, statistic, element), sorted, and printed with repr-roundtrip
precision, so re-emitting the same report is byte-identical no matter how
many workers ran the simulation.
"""

import hashlib
import json
from dataclasses import dataclass, field

CSV_HEADER = "experiment,group,law,n,statistic,element,mean,variance,stderr,reps,seed"


def plan_hash(canonical):
    """Stable short hash of a plan's canonical dict (worker count excluded)."""
    blob = json.dumps(canonical, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def _field(text):
    text = str(text)
    if "," in text or '"' in text:
        return '"%s"' % text.replace('"', '""')
    return text


def _num(x):
    return "%.17g" % float(x)


@dataclass
class StatRow:
    experiment: str
    group: str
    law: str
    n: int
    statistic: str
    element: str
    mean: float
    variance: float
    stderr: float
    reps: int
    seed: int

    def key(self):
        return (self.n, self.statistic, self.element)

    def csv(self):
        return ",".join(
            [
                _field(self.experiment),
                _field(self.group),
                _field(self.law),
                str(int(self.n)),
                _field(self.statistic),
                _field(self.element),
                _num(self.mean),
                _num(self.variance),
                _num(self.stderr),
                str(int(self.reps)),
                str(int(self.seed)),
            ]
        )


@dataclass
class EstimateReport:
    plan_hash: str
    seed: int
    rows: list = field(default_factory=list)
    failures: list = field(default_factory=list)

    def sorted_rows(self):
        return sorted(self.rows, key=StatRow.key)

    def to_csv(self):
        lines = [CSV_HEADER]
        lines.extend(row.csv() for row in self.sorted_rows())
        return "\n".join(lines) + "\n"

    def to_json(self):
        payload = {
            "plan_hash": self.plan_hash,
            "seed": self.seed,
            "failures": list(self.failures),
            "rows": [vars(row) for row in self.sorted_rows()],
        }
        return json.dumps(payload, indent=2, sort_keys=True) + "\n"

    def get(self, n, statistic, element=""):
        for row in self.rows:
            if row.n == n and row.statistic == statistic and row.element == element:
                return row
        raise KeyError("no row for n=%s statistic=%s element=%s" % (n, statistic, element))

    def series(self, statistic, element=""):
        """(n, mean) pairs for one statistic, ascending in n."""
        rows = [
            r for r in self.rows if r.statistic == statistic and r.element == element
        ]
        rows.sort(key=lambda r: r.n)
        return [(r.n, r.mean) for r in rows]
