import io
import os
import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from synthetic import synthetic_csv_text, write_synthetic_csv  # noqa: E402

from vwnet.data import parse_csv, preprocess  # noqa: E402


@pytest.fixture(scope="session")
def synthetic_data():
    """520 synthetic rows (schema-correct, made-up labels), encoded."""
    return preprocess(parse_csv(io.StringIO(synthetic_csv_text(520, seed=0, noise=0.5))))


@pytest.fixture(scope="session")
def synthetic_csv(tmp_path_factory):
    return write_synthetic_csv(tmp_path_factory.mktemp("data") / "synthetic.csv", 520, seed=0, noise=0.5)


def real_data_path():
    """Location of the real questionnaire CSV, from $VWNET_DATA or ./data/."""
    env = os.environ.get("VWNET_DATA")
    candidates = [Path(env)] if env else []
    root = Path(__file__).resolve().parent.parent
    candidates += [root / "data" / "diabetes_data_upload.csv", root / "data" / "diabetes.csv"]
    for path in candidates:
        if path.is_file():
            return path
    return None


# --- acceptance summary: one pass/fail line per criterion ---

_ACCEPTANCE = {}


def pytest_runtest_logreport(report):
    if report.when != "call" and not (report.when == "setup" and report.outcome != "passed"):
        return
    crit = dict(report.user_properties).get("criterion")
    if crit is None:
        return
    prev = _ACCEPTANCE.get(crit, "PASS")
    _ACCEPTANCE[crit] = "PASS" if prev == "PASS" and report.outcome == "passed" else "FAIL"


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for crit in sorted(_ACCEPTANCE, key=lambda c: int(c.split()[0])):
        terminalreporter.write_line(f"[{_ACCEPTANCE[crit]}] criterion {crit}")
