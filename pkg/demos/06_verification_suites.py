"""
Seeded verification suites
==========================

Every module ships an invariant suite.  Reports are deterministic for a
given (suite, dim, trials, seed); the same runs are available from the
command line as ``flagcalc verify <suite>``.
"""
import json

from flagcalc.suites import SUITES, run_suite

for name in SUITES:
    report = run_suite(name, dim=6, trials=20, seed=42).to_json()
    report.pop("elapsed_ms")
    print(json.dumps(report))
