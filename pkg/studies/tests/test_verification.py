from dataclasses import replace

from studies.verification import CheckResult, VerificationSuite, run_verification


def test_suite_passes():
    results = run_verification(n=3, samples=5, seed=1)
    assert len(results) == 11
    failed = [str(r) for r in results if not r.passed]
    assert not failed, failed


def test_cubic_elements_pass():
    suite = VerificationSuite(n=2, degree=3, samples=3)
    for check in (suite.hessian_constraint, suite.trace_identity, suite.quadratic_reproduction,
                  suite.embedding_identity, suite.jacobian_consistency):
        assert check().passed


def test_check_result_text():
    assert str(CheckResult('demo', True, 1e-15, 1e-12)).startswith('PASS demo')
    assert str(CheckResult('demo', False, 1.0, 1e-12, 'detail')).endswith('detail')


def test_embedding_identity_sees_the_boundary_operator():
    suite = VerificationSuite(n=2, samples=3)
    assert suite.embedding_identity().passed
    suite.ops = replace(suite.ops, G=5.0 * suite.ops.G)
    assert not suite.embedding_identity().passed
