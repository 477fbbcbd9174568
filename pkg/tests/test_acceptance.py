"""The full acceptance ledger at stated sizes and tolerances.

One test per numbered criterion; each prints the same per-check lines the
`walkrange verify` subcommand emits, then requires every check to pass.
The shared context reuses the big ensembles across criteria exactly as
the verify tier does."""

import pytest

from walkrange.acceptance import CRITERIA, SuiteContext, run_criterion


@pytest.fixture(scope="module")
def ctx():
    return SuiteContext(threads=1)


@pytest.mark.parametrize(
    "number",
    [c.number for c in CRITERIA],
    ids=["c%02d %s" % (c.number, c.name) for c in CRITERIA],
)
def test_criterion(number, ctx):
    results = run_criterion(number, ctx)
    assert results, "criterion produced no checks"
    for r in results:
        print(r.line())
    bad = [r for r in results if r.status != "pass"]
    assert not bad, "; ".join(r.line() for r in bad)
