"""Command line front-end.

    diffcoh run JOB.json [--jobs N] [--timings] [--out FILE] [--text]
    diffcoh compute COMPLEX --n K [--coeff FILE] [--what cohomology|diffcoh-invariants]

Exit codes: 0 all claims verified, 1 some claim failed, 2 usage or job error.
Set DIFFCOH_CACHE_DIR to reuse certificates of identical tasks across runs.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import random
import sys
import time
from fractions import Fraction
from concurrent.futures import ProcessPoolExecutor
from importlib import resources
from pathlib import Path
from typing import Dict, List, Optional, Tuple

import jsonschema

from . import __version__, builtins
from .cochains import Cochain, GradedCoefficients, integers
from .forms import BudgetExceeded, FormDegreeBudget, form_from_literal
from .simplicial import (Pair, PresentationError, ProductSet, as_pair, build, constant_map, diagonal,
                         projections)

EXIT_OK, EXIT_FAILED, EXIT_USAGE = 0, 1, 2
SUITES = ("axioms", "group", "ring", "integration", "pairs", "products-odd")


class JobError(ValueError):
    pass


def load_schema(name: str) -> dict:
    return json.loads(resources.files("diffcoh").joinpath("schemas", name).read_text())


def validate_job(job: dict) -> None:
    try:
        jsonschema.validate(job, load_schema("jobspec.schema.json"))
    except jsonschema.ValidationError as e:
        raise JobError(f"malformed job: {e.message}") from None


# -- complexes -----------------------------------------------------------------

def resolve_complex(entry) -> Tuple[str, object]:
    """(name, SimplicialSet or Pair) for a job entry."""
    if isinstance(entry, str):
        try:
            return entry, builtins.lookup(entry)
        except KeyError as e:
            raise JobError(str(e.args[0])) from None
    try:
        X = build(entry["presentation"], entry["name"])
        if "subcomplex" in entry:
            return entry["name"], Pair.from_subcells(X, entry["subcomplex"])
        return entry["name"], X
    except (PresentationError, KeyError, TypeError, ValueError) as e:
        raise JobError(f"complex {entry.get('name')!r}: {e}") from None


# -- tasks ---------------------------------------------------------------------

def _certificate(result, complex_name: str, degree: Optional[int], timing: Optional[float]) -> dict:
    return {
        "claim": result.claim,
        "complex": complex_name,
        "degree": degree,
        "status": "verified" if result.ok else "failed",
        "detail": result.detail,
        "witness": result.witness,
        "counterexample": result.counterexample if not result.ok else None,
        "timing": timing,
    }


def _error_certificate(claim, complex_name, degree, err: Exception, timing) -> dict:
    return {"claim": claim, "complex": complex_name, "degree": degree, "status": "failed",
            "detail": type(err).__name__, "witness": None,
            "counterexample": {"error": str(err)}, "timing": timing}


def run_task(task: dict) -> List[dict]:
    """Run one (suite, complex, degree) task; returns certificate dicts."""
    from . import core
    suite, name, n = task["suite"], task["name"], task["degree"]
    _, base = resolve_complex(task["entry"])
    coeff = GradedCoefficients.from_json(task["coefficients"])
    budget = FormDegreeBudget(**task["budget"])
    samples = task["samples"]
    rng = random.Random(f"{task['seed']}:{suite}:{name}:{n}")
    absolute = as_pair(base).is_absolute()
    M = as_pair(base).ambient
    start = time.perf_counter()
    try:
        results = []
        if suite == "axioms":
            results += core.check_axiom_sequence(base, n, coeff, rng, samples, budget)
            if name == "circle" and n == 1 and coeff == integers():
                results += core.torsion_example()
        elif suite == "group":
            results += core.check_group_laws(base, n, coeff, rng, samples)
            A = core.natural_perturbation(n, coeff, 2)
            if A is not None:
                corr = core.CorrectionData(A=A, N=core.natural_perturbation(n, coeff, 1))
                results += core.check_group_laws(base, n, coeff, rng, samples, corr)
            results += core.check_perturbation_invariance(base, n, coeff, rng, samples)
            results += core.check_transitivity(base, n, coeff, rng, samples)
            results += core.check_change_of_cocycle(base, n, coeff, rng, samples)
            results += core.check_homotopy_shift(base, n, coeff, rng, samples)
        elif suite == "ring":
            if absolute:
                results += core.check_ring_laws(M, coeff, rng, (0, 1, 2), samples, budget)
                results += core.check_ring_map(diagonal(M), coeff, rng, (0, 1, 2), samples, budget, "diagonal")
                if isinstance(M, ProductSet) and len(M.factors) == 2:
                    results += core.check_ring_map(projections(M)[0], coeff, rng, (0, 1, 2), samples, budget,
                                                  "first-projection")
                if name == "torus":
                    results += core.check_circle_classes_on_torus(coeff)
                if M.dimension <= 1:
                    results += core.check_integration_product(M, coeff, rng, samples, budget=budget)
        elif suite == "integration":
            if absolute:
                results += core.check_integration(M, n, coeff, rng, samples, budget)
                results += core.check_integration_natural(constant_map(M, builtins.point(), "pt"), n, coeff, rng,
                                                          samples)
                if n % 2 == 0:
                    results += core.check_double_integral(M, n, coeff, rng, samples)
        elif suite == "pairs":
            if not absolute:
                results += core.check_pair_sequence(base, n, coeff, rng, samples, budget)
        elif suite == "products-odd":
            if absolute:
                results += core.check_odd_products(M, coeff, rng, samples, budget)
        elapsed = time.perf_counter() - start
        timing = elapsed if task["timings"] else None
        return [_certificate(r, name, n if task["degreed"] else None, timing) for r in results]
    except BudgetExceeded as e:
        t = time.perf_counter() - start if task["timings"] else None
        return [_error_certificate(f"{suite}.budget", name, n, e, t)]


def _fixture_certificates(job: dict, coeff: GradedCoefficients) -> List[dict]:
    from .core import DifferentialTriple, TripleError
    out = []
    for fx in job.get("fixtures", []):
        _, base = resolve_complex(fx["complex"])
        n = fx["degree"]
        claim = f"fixture.{fx['name']}.valid"
        try:
            c = Cochain(base, n, coeff, fx.get("c", {}))
            w = form_from_literal(base, n, coeff, fx.get("omega", {}))
            h = Cochain(base, n - 1, coeff, {k: Fraction(v) for k, v in fx.get("h", {}).items()}, rational=True)
            DifferentialTriple(c, w, h)
            out.append({"claim": claim, "complex": fx["complex"], "degree": n, "status": "verified",
                        "detail": "triple satisfies its defining equations", "witness": None,
                        "counterexample": None, "timing": None})
        except TripleError as e:
            out.append({"claim": claim, "complex": fx["complex"], "degree": n, "status": "failed",
                        "detail": e.kind, "witness": None,
                        "counterexample": {"violation": e.kind, "simplex": e.cell, "message": str(e)},
                        "timing": None})
        except ValueError as e:
            raise JobError(f"fixture {fx['name']!r}: {e}") from None
    return out


def plan(job: dict, timings: bool) -> List[dict]:
    coeff = job.get("coefficients", {"kind": "integers"})
    degrees = job.get("degrees", [1, 2])
    tasks = []
    for entry in job["complexes"]:
        name, _ = resolve_complex(entry)
        for suite in job["suites"]:
            degreed = suite not in ("ring", "products-odd")
            for n in (degrees if degreed else [0]):
                tasks.append({"suite": suite, "name": name, "entry": entry, "degree": n, "degreed": degreed,
                              "coefficients": coeff, "seed": job.get("seed", 0),
                              "samples": job.get("samples", 3), "budget": job.get("budget", {}),
                              "timings": timings})
    return tasks


def _cache_path(task: dict) -> Optional[Path]:
    root = os.environ.get("DIFFCOH_CACHE_DIR")
    if not root or task["timings"]:
        return None
    key = hashlib.sha256(json.dumps([__version__, task], sort_keys=True).encode()).hexdigest()
    return Path(root) / f"{key}.json"


def _run_cached(task: dict) -> List[dict]:
    path = _cache_path(task)
    if path is not None and path.exists():
        return json.loads(path.read_text())
    out = run_task(task)
    if path is not None:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(out, sort_keys=True))
    return out


def _sort_key(cert: dict):
    return (cert["complex"], -1 if cert["degree"] is None else cert["degree"], cert["claim"])


def run(job: dict, jobs: int = 1, timings: bool = False) -> List[dict]:
    """Validate and run a job; returns sorted certificate dicts."""
    validate_job(job)
    coeff = GradedCoefficients.from_json(job.get("coefficients", {"kind": "integers"}))
    try:
        FormDegreeBudget(**job.get("budget", {}))
    except ValueError as e:
        raise JobError(f"budget: {e}") from None
    tasks = plan(job, timings)
    certs = _fixture_certificates(job, coeff)
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            for out in pool.map(_run_cached, tasks):
                certs.extend(out)
    else:
        for t in tasks:
            certs.extend(_run_cached(t))
    return sorted(certs, key=_sort_key)


def summarize(certs: List[dict]) -> str:
    lines = []
    for c in certs:
        deg = "" if c["degree"] is None else f" n={c['degree']}"
        lines.append(f"[{'PASS' if c['status'] == 'verified' else 'FAIL'}] {c['complex']}{deg} {c['claim']}"
                     f" ({c['detail']})")
    failed = sum(c["status"] == "failed" for c in certs)
    lines.append(f"{len(certs) - failed} verified, {failed} failed")
    return "\n".join(lines)


# -- compute -------------------------------------------------------------------

def compute(name: str, n: int, coeff: GradedCoefficients, what: str) -> dict:
    from .core import invariants
    from .linalg import cohomology
    _, base = resolve_complex(name)
    if what == "cohomology":
        H = cohomology(base, n, coefficients=coeff)
        return {"complex": name, "degree": n, "coefficients": coeff.to_json(), "cohomology": str(H),
                "presentation": H.to_json()}
    return {"complex": name, "degree": n, "coefficients": coeff.to_json(), **invariants(base, n, coeff)}


# -- entry point ---------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="diffcoh", description="Exact differential cohomology of simplicial sets")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="run verification suites from a job file")
    r.add_argument("job", type=Path)
    r.add_argument("--jobs", type=int, default=1, help="worker processes")
    r.add_argument("--timings", action="store_true", help="record per-task wall time")
    r.add_argument("--out", type=Path, help="write the JSON report here instead of stdout")
    r.add_argument("--text", action="store_true", help="print a plain-text summary")
    c = sub.add_parser("compute", help="cohomology or invariants of a complex")
    c.add_argument("complex")
    c.add_argument("--n", type=int, required=True)
    c.add_argument("--coeff", type=Path, help="JSON coefficient description")
    c.add_argument("--what", choices=("cohomology", "diffcoh-invariants"), default="cohomology")
    return p


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_USAGE if e.code else EXIT_OK
    try:
        if args.command == "compute":
            coeff = integers()
            if args.coeff is not None:
                coeff = GradedCoefficients.from_json(json.loads(args.coeff.read_text()))
            print(json.dumps(compute(args.complex, args.n, coeff, args.what), indent=2, ensure_ascii=False))
            return EXIT_OK
        job = json.loads(args.job.read_text())
        if args.jobs < 1:
            raise JobError("--jobs must be at least 1")
        certs = run(job, args.jobs, args.timings)
    except (JobError, OSError, json.JSONDecodeError, ValueError) as e:
        print(f"diffcoh: error: {e}", file=sys.stderr)
        return EXIT_USAGE
    report = {"version": __version__, "certificates": certs,
              "summary": {"verified": sum(c["status"] == "verified" for c in certs),
                          "failed": sum(c["status"] == "failed" for c in certs)}}
    text = json.dumps(report, indent=2, sort_keys=True, ensure_ascii=False)
    if args.out:
        args.out.write_text(text + "\n")
    else:
        print(text)
    if args.text:
        print(summarize(certs), file=sys.stderr)
    return EXIT_FAILED if report["summary"]["failed"] else EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
