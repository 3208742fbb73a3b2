"""Deterministic evaluation from a recorded cassette — no network, no key.

The shipped fixture under tests/data/replay holds 25 problems and every
completion the fixture model produced for them.  Replaying it exercises
the whole harness: prompting, parsing, rule checks, solving, scoring,
and report rendering — byte-identically on every run.

    python3 demos/05_replay_eval.py
"""

import tempfile
from collections import Counter
from pathlib import Path

from declsolve import Replay, RunConfig, load_gsm8k, run_eval, spec_for_variant

FIXTURE = Path(__file__).resolve().parent.parent / "tests" / "data" / "replay"

problems = load_gsm8k(FIXTURE / "problems.jsonl")
print(f"dataset: {len(problems)} problems, e.g. {problems[0].question!r}")

spec = spec_for_variant("declarative_principles")
config = RunConfig(model="fixture-completions-v1")

with tempfile.TemporaryDirectory() as scratch:
    report = run_eval(
        problems,
        spec,
        Replay(str(FIXTURE / "cassette.jsonl")),
        config,
        dataset_name="replay-25",
        out_dir=Path(scratch) / "out",
        workers=4,
    )
    print(f"\nsolve rate: {report.solve_rate:.1f}%")
    print("verdicts:", dict(Counter(r.verdict for r in report.records)))

    print("\nreport.txt:")
    print((Path(scratch) / "out" / "report.txt").read_text())

# A failure record keeps enough detail to debug the miss.
miss = next(r for r in report.records if r.verdict == "ParseFailure")
print(f"example failure ({miss.problem_id}): {miss.detail}")
