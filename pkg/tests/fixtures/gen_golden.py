"""Regenerates golden_report.json from the deterministic end-to-end run.

Run from the tests/ directory: python3 fixtures/gen_golden.py
The run is executed twice and must produce identical bytes before the
golden is written.
"""

import sys
import tempfile
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1]))

from test_acceptance import _golden_run  # noqa: E402


def main():
    with tempfile.TemporaryDirectory() as tmp:
        tmp = Path(tmp)
        first = _golden_run(tmp / "a")
        second = _golden_run(tmp / "b")
        assert first == second, "end-to-end run is not deterministic"
    out = Path(__file__).parent / "golden_report.json"
    out.write_bytes(first)
    print(f"wrote {out} ({len(first)} bytes)")


if __name__ == "__main__":
    main()
