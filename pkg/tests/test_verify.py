import json
import math

from framewidths import verify
from framewidths.verify import Check, VerifyReport, run_verify


def test_all_checks_pass():
    rep = run_verify(seed=0)
    assert rep.passed, rep.table()
    names = " ".join(c.name for c in rep.checks)
    for word in ("biorthogonality", "reconstruction", "moment", "greedy", "isomorphism", "quasi-norm"):
        assert word in names
    assert all(math.isfinite(c.value) for c in rep.checks)


def test_other_seed_passes():
    assert run_verify(seed=12345).passed


def test_crash_becomes_failed_check(monkeypatch):
    def boom():
        raise RuntimeError("injected")

    monkeypatch.setattr(verify, "_tight_duplicate", boom)
    rep = run_verify(seed=0)
    assert not rep.passed
    [bad] = rep.failures()
    assert isinstance(bad, Check) and "injected" in bad.detail and math.isnan(bad.value)
    assert "FAIL" in rep.table()


def test_report_serialization():
    rep = VerifyReport([Check("a", True, 0.0, 1e-12), Check("b", False, 2.0, 1.0, "too big")])
    data = json.loads(rep.to_json())
    assert data["passed"] is False and [c["name"] for c in data["checks"]] == ["a", "b"]
    lines = rep.table().splitlines()
    assert lines[0].startswith("PASS") and lines[1].startswith("FAIL") and "too big" in lines[1]
