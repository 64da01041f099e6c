"""Smoke test for the Python bindings.

Build first:  pip install --no-build-isolation -e crates/py
"""

import sys
import tempfile
from pathlib import Path

import attitudes_py as at


def main() -> int:
    assert at.normalize_text("x < 2/(-4)") == "x<2/(-4)"

    steps = at.segment_pair("-4x<2", "x<-1/2")
    assert [s.correct for s in steps] == [False, True], steps
    assert steps[0].to_state == "x<2/(-4)"

    (case,) = at.encode_pair("-5x+4-7/3=9x^2-10", "x+4-7/3=9x^2-10+5")
    assert case["context.arg.category"] == "multiplicative"
    assert case["outcome.arg.category"] == "additive"

    with tempfile.TemporaryDirectory() as tmp:
        tmp = Path(tmp)
        n = at.synth(tmp / "t.jsonl", tmp / "truth.jsonl", "s1", 30, 7, {"add_move_keep_sign": 0.5})
        assert n > 0
        run = at.mine(tmp / "t.jsonl")
        s = run.summary
        assert s.students == 1 and s.cases > 0
        assert sum(s.attitudes_per_student.values()) == s.attitudes
        assert "Attitude #1" in run.reports()["s1"]
        files = run.export(tmp / "out", "csv,svg")
        assert (tmp / "out" / "histogram.csv").exists()
        print(f"ok: {s.cases} cases, {s.attitudes} attitudes, {len(files)} files")
    return 0


if __name__ == "__main__":
    sys.exit(main())
