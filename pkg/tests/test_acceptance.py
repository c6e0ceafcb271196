"""One test per acceptance criterion; each prints a PASS/FAIL line."""

import subprocess
import sys
import time
from pathlib import Path

import pytest

from explic import formula as F
from explic.bench import expected_verdict
from explic.checker import cause_formula_equiv, check, compute_cause
from explic.oracle import BoundedConfig, oracle_check
from explic.system import generate
from explic.trace import parse_trace
from conftest import ACCEPTANCE
from randgen import random_ice, random_kltl, random_system, rng_for

HERE = Path(__file__).parent
AUCTION_VERDICTS = {
    "blind": dict(ice=False, ece=False, fce=False, priv=True),
    "public": dict(ice=True, ece=True, fce=True, priv=False),
    "explain": dict(ice=True, ece=False, fce=False, priv=None),  # priv: false for 2 bidders, true for 3 and 4
}
RPS_VERDICTS = {"standard": dict(ice=True, ece=True, fce=True, priv=False),
             "well": dict(ice=False, ece=True, fce=False, priv=True)}


def _rows(bench_results, family):
    return [row for row, _ in bench_results if row["family"] == family]


def _bench_time(rows):
    return sum(float(r["millis"]) for r in rows) / 1000.0


def _tb(v):
    return "true" if v else "false"


def test_criterion_1_auction(bench_results, verdict_line):
    rows = _rows(bench_results, "auction")
    bad = []
    for r in rows:
        n, variant = r["params"].split(":")
        want = AUCTION_VERDICTS[variant][r["requirement"]]
        if want is None:
            want = n != "2"
        if r["verdict"] != _tb(want) or float(r["millis"]) > 300_000:
            bad.append(f"{r['params']}/{r['requirement']}={r['verdict']}")
    ok = len(rows) == 36 and not bad
    assert verdict_line(1, ok, f"{len(rows)} auction cells, mismatches: {bad or 'none'}", _bench_time(rows))


def test_criterion_2_rps(bench_results, verdict_line):
    rows = _rows(bench_results, "rps")
    bad = [f"{r['params']}/{r['requirement']}={r['verdict']}" for r in rows
           if r["verdict"] != _tb(RPS_VERDICTS[r["params"]][r["requirement"]]) or float(r["millis"]) > 60_000]
    ok = len(rows) == 8 and not bad
    # The Well row is not reproduced by the implemented model; analysed in the decisions ledger.
    assert verdict_line(2, ok, f"{len(rows)} rps cells, mismatches: {bad or 'none'}", _bench_time(rows))


def test_criterion_3_pennies(bench_results, verdict_line):
    rows = _rows(bench_results, "pennies")
    bad = []
    for r in rows:
        n, mode = r["params"].split(":")
        n, req = int(n), r["requirement"]
        if mode == "blaming":
            want = True if req == "ice" else (False if req == "priv" else None)
        else:
            want = n > 2 if req == "priv" else n == 2
        if (want is not None and r["verdict"] != _tb(want)) or float(r["millis"]) > 300_000:
            bad.append(f"{r['params']}/{req}={r['verdict']}")
    ok = len(rows) == 24 and not bad
    assert verdict_line(3, ok, f"{len(rows)} pennies cells, mismatches: {bad or 'none'}", _bench_time(rows))


def test_expected_table_matches_criteria(bench_results):
    # the embedded table used by `explic bench` agrees with the cells checked above
    for row, _ in bench_results:
        size = row["params"].split(":")[0]
        exp = expected_verdict(row["family"], row["params"].split(":")[-1], size if size.isdigit() else None,
                               row["requirement"])
        assert _tb(exp) == row["expected"]


CAUSES = [
    ("auction:3:explain", "{o,b1,e} {o} {o,b1} {w1} ({})^w", 0, "F w1", "b1 | X X b1"),
    ("auction:3:blind", "{o} {o,b2} {o,b1,b3} {w2} ({})^w", 3, "!w1", "Y Y (!b1 & Y !b1)"),
    ("auction:3:blind", "{o,b2} {o} {o,b1,b3} {w2} ({})^w", 3, "!w1", "Y Y Y !b1"),
]


def test_criterion_4_causes(verdict_line):
    t0 = time.perf_counter()
    bad = []
    for gen, trace, i, effect, cand in CAUSES:
        c = compute_cause(generate(gen), parse_trace(trace), i, F.parse_formula(effect), {"b1"})
        if not cause_formula_equiv(c, F.parse_formula(cand)):
            bad.append(cand)
    assert verdict_line(4, not bad, f"{len(CAUSES)} cause languages, wrong: {bad or 'none'}",
                        time.perf_counter() - t0)


AGREEMENT_SEEDS = range(120)
BASE_BOUNDS = (3, 2)


def agreement(seed):
    """Checker and oracle verdicts on one random instance.  Bounds start at
    BASE_BOUNDS and grow to cover every trace of a checker witness."""
    rng = rng_for(seed)
    sys_ = random_system(rng)
    f = random_ice(rng, sys_) if seed % 3 == 0 else random_kltl(rng, sys_, rng.randint(1, 3))
    v = check(sys_, f)
    P, L = BASE_BOUNDS
    if not v.holds:
        ws = v.counterexample.values()
        P = max([P] + [len(t.prefix) for t in ws])
        L = max([L] + [len(t.loop) for t in ws])
    o = oracle_check(sys_, f, BoundedConfig(P, L))
    return v.holds, o.holds, F.to_text(f)


def test_criterion_5_oracle_agreement(verdict_line):
    t0 = time.perf_counter()
    bad = []
    for seed in AGREEMENT_SEEDS:
        c, o, text = agreement(seed)
        if c != o:
            bad.append(f"seed {seed}: checker {c} oracle {o} on {text}")
    ok = len(AGREEMENT_SEEDS) >= 100 and not bad
    assert verdict_line(5, ok, f"{len(AGREEMENT_SEEDS)} instances, disagreements: {bad or 'none'}",
                        time.perf_counter() - t0)


PROPERTY_SUITES = ["test_properties.py", "test_automata.py"]


def test_criterion_6_property_suites(verdict_line):
    t0 = time.perf_counter()
    proc = subprocess.run([sys.executable, "-m", "pytest", "-q", "-p", "no:cacheprovider",
                           *[str(HERE / s) for s in PROPERTY_SUITES]],
                          capture_output=True, text=True, cwd=HERE.parent)
    summary = (proc.stdout.strip().splitlines() or ["no output"])[-1]
    assert verdict_line(6, proc.returncode == 0, summary, time.perf_counter() - t0), proc.stdout[-4000:]


def test_criterion_7_total_time(verdict_line):
    done = {n: s for n, _, s in ACCEPTANCE}
    missing = sorted(set(range(1, 7)) - set(done))
    if missing:
        pytest.skip(f"criteria {missing} did not run in this session")
    total = sum(done.values())
    assert verdict_line(7, total <= 45 * 60, f"criteria 1-6 took {total / 60:.1f} min (limit 45)", total)
