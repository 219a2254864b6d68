from hamlab.validate import run_validation


def test_quick_suite_green():
    results, elapsed = run_validation(master_seed=0, scale="quick")
    for r in results:
        assert r.passed, r.line()
    assert len(results) == 7


def test_fault_injection_trips_engine_equivalence():
    results, _ = run_validation(master_seed=0, scale="quick", fault="spawn-skip")
    by_name = {r.name: r for r in results}
    assert not by_name["engine-equivalence"].passed
    assert by_name["engine-equivalence"].replay_seed is not None


def test_validation_deterministic():
    a, _ = run_validation(master_seed=5, scale="quick")
    b, _ = run_validation(master_seed=5, scale="quick")
    assert [(r.name, r.n_checked, r.n_failed) for r in a] == [
        (r.name, r.n_checked, r.n_failed) for r in b
    ]
