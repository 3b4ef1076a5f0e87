from divalign import verify
from divalign.dive import dive_run


def test_all_checks_pass():
    results = verify.run_all()
    assert all(r.ok for r in results), [r.line() for r in results if not r.ok]


def test_injected_dive_fault_is_named():
    def broken(bg, sel, mapping, num_blocks=None, iters=20, rootchecks=True, backend=None):
        report = dive_run(bg, sel, mapping, num_blocks, iters, rootchecks, backend)
        last = report.per_iteration[-1]
        last[-1] ^= 0b10  # drop one realization of the last VN
        return report

    res = verify.check_oracle(count=5, dive=broken)
    assert not res.ok and res.name == "oracle-equivalence"
    names = [r.name for r in verify.run_all(dive=broken) if not r.ok]
    assert "oracle-equivalence" in names


def test_injected_non_monotone_is_named():
    def broken(bg, sel, mapping, num_blocks=None, iters=20, rootchecks=True, backend=None):
        report = dive_run(bg, sel, mapping, num_blocks, iters, rootchecks, backend)
        report.per_iteration[0][0] |= 1  # f(all faded) = 1
        return report

    assert verify.check_monotone(count=3, dive=broken).name == "monotone-functions"
    assert not verify.check_monotone(count=3, dive=broken).ok
