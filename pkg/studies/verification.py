"""
Built-in invariant suite: algebraic identities of the discretization checked
on random data over a small mesh. Each check returns a CheckResult; the suite
passes when all of them do.
"""
import logging
from dataclasses import dataclass

import numpy as np

from fem.forms import (MixedOperators, assemble_det_load, assemble_mixed_operators, assemble_newton_jacobian_block,
                       assemble_scalar_load)
from fem.hessian import discrete_hessian, hessian_residual, trace_identity_residual
from fem.linalg import Sym2x2, cof2, det2, frobenius
from fem.mesh import build_structured_mesh
from fem.quadrature import MAX_EXACTNESS, make_quadrature
from fem.spaces import LagrangeSpace, MatrixField, ScalarField, interpolate, interpolate_matrix

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    value: float
    tolerance: float
    detail: str = ''

    def __str__(self):
        status = 'PASS' if self.passed else 'FAIL'
        text = f"{status} {self.name}: {self.value:.3e} (tolerance {self.tolerance:.1e})"
        return f"{text} {self.detail}" if self.detail else text


def _result(name, value, tolerance, detail='', at_least=False):
    passed = value >= tolerance if at_least else value <= tolerance
    return CheckResult(name, bool(passed and np.isfinite(value)), float(value), tolerance, detail)


def _max_abs(*arrays) -> float:
    return max(float(np.max(np.abs(a))) for a in arrays)


class VerificationSuite:
    def __init__(self, n: int = 4, degree: int = 2, samples: int = 50, seed: int = 0):
        self.samples = samples
        self.rng = np.random.default_rng(seed)
        self.space = LagrangeSpace(build_structured_mesh(n), degree)
        self.ops: MixedOperators = assemble_mixed_operators(self.space)

    def random_scalar(self) -> ScalarField:
        return ScalarField(self.space, self.rng.standard_normal(self.space.n_dofs))

    def random_matrix(self) -> MatrixField:
        return MatrixField.from_vector(self.space, self.rng.standard_normal(3 * self.space.n_dofs))

    def random_sym(self, size=1000) -> Sym2x2:
        return Sym2x2(*self.rng.uniform(-1.0, 1.0, (3, size)))

    # ---- discrete Hessian ----
    def hessian_linearity(self) -> CheckResult:
        worst = 0.0
        for _ in range(self.samples):
            v, w = self.random_scalar(), self.random_scalar()
            a, b = (float(c) for c in self.rng.uniform(-2.0, 2.0, 2))
            Hv, Hw = discrete_hessian(v, self.ops), discrete_hessian(w, self.ops)
            combined = discrete_hessian(a * v + b * w, self.ops)
            expected = a * Hv.coefficients + b * Hw.coefficients
            scale = max(1.0, _max_abs(a * Hv.coefficients, b * Hw.coefficients))
            worst = max(worst, _max_abs(combined.coefficients - expected) / scale)
        return _result('hessian_linearity', worst, 1e-12)

    def hessian_homogeneity(self) -> CheckResult:
        worst = 0.0
        for _ in range(self.samples):
            v = self.random_scalar()
            alpha = float(self.rng.uniform(0.1, 10.0))
            Hv = discrete_hessian(v, self.ops).coefficients
            scaled = discrete_hessian(alpha * v, self.ops).coefficients
            worst = max(worst, _max_abs(scaled - alpha * Hv) / max(1.0, _max_abs(alpha * Hv)))
        return _result('hessian_homogeneity', worst, 1e-12)

    def hessian_constraint(self) -> CheckResult:
        worst = max(hessian_residual(v, discrete_hessian(v, self.ops), self.ops)
                    for v in (self.random_scalar() for _ in range(self.samples)))
        return _result('hessian_constraint', worst, 1e-11)

    def trace_identity(self) -> CheckResult:
        worst = 0.0
        for _ in range(self.samples):
            v = self.random_scalar()
            scale = max(1.0, _max_abs(self.ops.K @ v.coefficients))
            worst = max(worst, trace_identity_residual(v, discrete_hessian(v, self.ops), self.ops) / scale)
        return _result('trace_identity', worst, 1e-11)

    def quadratic_reproduction(self) -> CheckResult:
        """H(I_h q) = D^2 q for quadratics q."""
        worst = 0.0
        for _ in range(5):
            c = self.rng.uniform(-1.0, 1.0, 6)

            def q(x, y, c=c):
                return c[0] * x * x + c[1] * x * y + c[2] * y * y + c[3] * x + c[4] * y + c[5]

            def hess(x, y, c=c):
                ones = np.ones_like(x)
                return [[2 * c[0] * ones, c[1] * ones], [c[1] * ones, 2 * c[2] * ones]]

            H = discrete_hessian(interpolate(q, self.space), self.ops)
            exact = interpolate_matrix(hess, self.space)
            worst = max(worst, _max_abs(H.coefficients - exact.coefficients))
        return _result('quadratic_reproduction', worst, 1e-10)

    def embedding_identity(self) -> CheckResult:
        """
        tau = v I against the Hessian right-hand side -(div tau, D w) + <D w, tau n>:
        equals -(D v, D w) for interior v and any w, and (tr D^2 q, v) for any v
        when w interpolates a quadratic q.
        """
        space, ops = self.space, self.ops
        R = ops.hessian_rhs_operator
        zeros = np.zeros(space.n_dofs)
        unit_load = assemble_scalar_load(lambda x, y: np.ones_like(x), space)
        worst = 0.0
        for _ in range(self.samples):
            v = np.zeros(space.n_dofs)
            v[space.interior_dofs] = self.rng.standard_normal(len(space.interior_dofs))
            w = self.rng.standard_normal(space.n_dofs)
            lhs = np.concatenate([v, zeros, v]) @ (R @ w)
            rhs = -(v @ (ops.K @ w))
            worst = max(worst, abs(lhs - rhs) / max(1.0, abs(rhs)))

            v = self.rng.standard_normal(space.n_dofs)
            c = self.rng.uniform(-1.0, 1.0, 3)
            q = interpolate(lambda x, y, c=c: c[0] * x * x + c[1] * x * y + c[2] * y * y, space)
            lhs = np.concatenate([v, zeros, v]) @ (R @ q.coefficients)
            rhs = 2.0 * (c[0] + c[2]) * (unit_load @ v)
            worst = max(worst, abs(lhs - rhs) / max(1.0, abs(rhs)))
        return _result('embedding_identity', worst, 1e-11)

    # ---- 2x2 algebra ----
    def determinant_difference(self) -> CheckResult:
        A, B = self.random_sym(), self.random_sym()
        lhs = det2(A) - det2(B)
        rhs = frobenius(cof2((A + B) * 0.5), A - B)
        return _result('det_difference', _max_abs(lhs - rhs), 1e-13)

    def cofactor_linearity(self) -> CheckResult:
        A, B = self.random_sym(), self.random_sym()
        diff = cof2(A) - cof2(B) - cof2(A - B)
        return _result('cofactor_linearity', _max_abs(diff.a11, diff.a12, diff.a22), 1e-13)

    def cofactor_trace(self) -> CheckResult:
        A = self.random_sym()
        return _result('cofactor_frobenius', _max_abs(frobenius(cof2(A), A) - 2.0 * det2(A)), 1e-13)

    # ---- quadrature ----
    def quadrature_weights(self) -> CheckResult:
        worst = max(abs(float(make_quadrature(d).weights.sum()) - 1.0) for d in range(MAX_EXACTNESS + 1))
        return _result('quadrature_weights', worst, 1e-13)

    # ---- Newton Jacobian ----
    def jacobian_consistency(self, states: int = 10, epsilons=(1e-5, 1e-6)) -> CheckResult:
        """Taylor remainder ||R(eta + e d) - R(eta) - e J d|| must shrink like e^2."""
        orders = []
        for _ in range(states):
            eta, direction = self.random_matrix(), self.random_matrix()
            J = assemble_newton_jacobian_block(eta, rule=self.ops.rule)
            base = assemble_det_load(eta, rule=self.ops.rule)
            linear = J @ direction.coefficients
            remainders = [
                float(np.linalg.norm(assemble_det_load(eta + eps * direction, rule=self.ops.rule)
                                     - base - eps * linear))
                for eps in epsilons
            ]
            orders.append(np.log(remainders[0] / remainders[1]) / np.log(epsilons[0] / epsilons[1]))
        return _result('jacobian_consistency', min(orders), 1.9,
                       detail=f"(minimum observed order over {states} states)", at_least=True)

    def checks(self):
        return (
            self.hessian_linearity,
            self.hessian_homogeneity,
            self.hessian_constraint,
            self.trace_identity,
            self.quadratic_reproduction,
            self.embedding_identity,
            self.determinant_difference,
            self.cofactor_linearity,
            self.cofactor_trace,
            self.quadrature_weights,
            self.jacobian_consistency,
        )

    def run(self) -> list:
        results = []
        for check in self.checks():
            result = check()
            log = logger.info if result.passed else logger.error
            log("check=%s passed=%s value=%.3e tolerance=%.1e", result.name, result.passed,
                result.value, result.tolerance)
            results.append(result)
        return results


def run_verification(n: int = 4, degree: int = 2, samples: int = 50, seed: int = 0) -> list:
    return VerificationSuite(n, degree, samples, seed).run()
