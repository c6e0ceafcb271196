"""Benchmark families, their named requirements and the expected verdicts."""

import csv
import json
import logging
import time
from concurrent.futures import ProcessPoolExecutor
from importlib import resources

from . import formula as F
from .errors import ExplicError, FormulaError, ResourceLimit
from .system import generate

log = logging.getLogger(__name__)

# agent, trigger, effect, privacy secret and privacy condition per family
FAMILIES = {
    "auction": dict(agent="bidder1", trigger="!w1 & !o & Y o", effect="!w1", secret="b2", condition=None),
    "rps": dict(agent="agent1", trigger="l1", effect="l1", secret="p2", condition="!d"),
    "pennies": dict(agent="player1", trigger="!w", effect="!w", secret="c2", condition="!w"),
}
REQS = ("ice", "ece", "fce", "priv")
CSV_COLUMNS = ["family", "params", "requirement", "verdict", "expected", "millis", "peak_states"]


def family_of(sys):
    fam = sys.name.split("_")[0]
    return fam if fam in FAMILIES else None


def requirement(sys, spec):
    """Formula for a named requirement.

    ``ice``/``ece``/``fce`` take ``:AGENT[:TRIGGER:EFFECT]``; ``priv`` takes
    ``:AGENT:SECRET[:CONDITION]``.  Missing parts come from the family
    defaults of generated systems.
    """
    name, *args = spec.split(":")
    name = name.lower()
    defaults = FAMILIES.get(family_of(sys), {})
    agent = args[0] if args else defaults.get("agent")
    if agent is None:
        raise FormulaError(f"requirement {spec!r} needs an agent")
    if name in ("ice", "ece", "fce"):
        if len(args) >= 3:
            trigger, effect = args[1], args[2]
        elif "trigger" in defaults:
            trigger, effect = defaults["trigger"], defaults["effect"]
        else:
            raise FormulaError(f"requirement {spec!r} needs TRIGGER:EFFECT for this model")
        return F.mk_explainability(sys, agent, F.parse_formula(trigger), F.parse_formula(effect), name.upper())
    if name == "priv":
        if len(args) >= 2:
            secret = args[1]
            cond = args[2] if len(args) >= 3 else None
        elif "secret" in defaults:
            secret, cond = defaults["secret"], defaults["condition"]
        else:
            raise FormulaError(f"requirement {spec!r} needs a SECRET for this model")
        return F.mk_privacy(agent, F.parse_formula(secret), F.parse_formula(cond) if cond else None)
    raise FormulaError(f"unknown requirement {name!r} (expected one of {', '.join(REQS)})")


def expected_table():
    text = resources.files("explic").joinpath("data/expected.json").read_text()
    return json.loads(text)


def expected_verdict(family, variant, size, req, table=None):
    table = table or expected_table()
    cell = table.get(family, {}).get(variant, {}).get(req)
    if isinstance(cell, dict):
        cell = cell.get(str(size), cell.get("default"))
    return cell


def instances(suite, max_bidders=4, max_players=4, blaming="both", min_size=2):
    out = []
    if suite in ("auction", "all"):
        for n in range(min_size, max_bidders + 1):
            for variant in ("blind", "public", "explain"):
                out.append(("auction", variant, n, f"auction:{n}:{variant}"))
    if suite in ("rps", "all"):
        for variant in ("standard", "well"):
            out.append(("rps", variant, None, f"rps:{variant}"))
    if suite in ("pennies", "all"):
        modes = {"both": ("plain", "blaming"), "yes": ("blaming",), "no": ("plain",)}[blaming]
        for n in range(min_size, max_players + 1):
            for mode in modes:
                out.append(("pennies", mode, n, f"pennies:{n}:{mode}"))
    if not out:
        raise ExplicError(f"unknown suite {suite!r}")
    return out


def run_instance(job):
    family, variant, size, gen, req, cap, timeout = job
    sys = generate(gen)
    from .checker import check

    f = requirement(sys, req)
    t0 = time.perf_counter()
    try:
        v = check(sys, f, cap=cap, timeout=timeout)
        verdict = "true" if v.holds else "false"
        peak = max((s["states"] for s in v.stats.values()), default=0)
        cex = v.counterexample
    except ResourceLimit as exc:
        verdict, peak, cex = "timeout" if "timeout" in str(exc) else "cap", 0, None
    millis = (time.perf_counter() - t0) * 1000.0
    exp = expected_verdict(family, variant, size, req)
    params = gen.split(":", 1)[1]
    row = {
        "family": family,
        "params": params,
        "requirement": req,
        "verdict": verdict,
        "expected": "" if exp is None else ("true" if exp else "false"),
        "millis": f"{millis:.1f}",
        "peak_states": peak,
    }
    return row, cex


def run_suite(suite, max_bidders=4, max_players=4, blaming="both", cap=1_000_000, timeout=300.0, jobs=1,
              reqs=REQS):
    jobs_list = [(fam, var, n, gen, req, cap, timeout)
                 for fam, var, n, gen in instances(suite, max_bidders, max_players, blaming) for req in reqs]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            results = list(ex.map(run_instance, jobs_list))
    else:
        results = [run_instance(j) for j in jobs_list]
    results.sort(key=lambda r: (r[0]["family"], _size_key(r[0]["params"]), r[0]["requirement"]))
    return results


def _size_key(params):
    parts = params.split(":")
    return tuple((0, int(p)) if p.isdigit() else (1, p) for p in parts)


def mismatches(rows):
    return [r for r in rows if r["expected"] and r["verdict"] != r["expected"]]


def write_csv(rows, fh):
    w = csv.DictWriter(fh, fieldnames=CSV_COLUMNS)
    w.writeheader()
    for r in rows:
        w.writerow(r)
