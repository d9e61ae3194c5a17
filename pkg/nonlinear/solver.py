"""
Nonlinear solvers for the mixed discrete system: find u_h in V_h (u_h = g_h
on the boundary) and sigma_h = H(u_h) in Sigma_h with

    (det sigma_h, v) = (f, v)    for all interior v in V_h.

Two iterations are provided:

time marching
    nu (D u^{r+1}, D v) = nu (D u^r, D v) + (det sigma^r - f, v), then
    sigma^{r+1} = H(u^{r+1}). One SPD solve with the interior stiffness
    matrix per step; the factorization is reused.

Newton
    the coupled linearization in (delta sigma, delta u) with the cofactor
    Jacobian block, solved as one sparse system by pivoted LU.
"""
import logging
import time
from functools import cached_property

import numpy as np
import scipy.sparse as sp

from fem.forms import (MixedOperators, apply_dirichlet, assemble_det_load, assemble_mixed_operators,
                       assemble_newton_jacobian_block, assemble_scalar_load, boundary_values, load_rule)
from fem.hessian import discrete_hessian
from fem.linalg import cof2, eig2, solve_general, solve_spd
from fem.spaces import LagrangeSpace, MatrixField, ScalarField, interpolate
from mongeampere import settings
from mongeampere.exceptions import (InvalidProblemError, LinearSolveError, NonConvexIterateError,
                                    SingularJacobianError)
from nonlinear.models import InitialGuess, Method, Problem, RescaledResult, SolverConfig, SolveResult

logger = logging.getLogger(__name__)

DIVERGENCE_FACTOR = 10.0
DIVERGENCE_STREAK = 5
# share of sampled points allowed a non-positive cofactor eigenvalue in estimate_nu
NONCONVEX_SHARE = 0.05


def _sampled_cells(space: LagrangeSpace) -> np.ndarray:
    """Cells without a vertex on a domain corner, or every cell when none is left."""
    mesh = space.mesh
    cells = np.setdiff1d(np.arange(mesh.n_cells), mesh.corner_cells)
    return cells if len(cells) else np.arange(mesh.n_cells)


def cofactor_eigenvalues(u0: ScalarField, ops: MixedOperators):
    """
    Eigenvalues lam1 <= lam2 of cof H(u0) at the assembly quadrature points,
    flattened, with the points themselves. Cells touching a corner of the
    domain are left out: the discrete Hessian is not consistent there.
    """
    cells = _sampled_cells(ops.space)
    lam1, lam2 = eig2(cof2(discrete_hessian(u0, ops).values_at(ops.rule)))
    points = ops.space.tabulate(ops.rule).points[cells].reshape(-1, 2)
    return np.asarray(lam1)[cells].ravel(), np.asarray(lam2)[cells].ravel(), points


def cofactor_bounds(u0: ScalarField, ops: MixedOperators):
    """(m, M, point): extreme sampled cofactor eigenvalues and the (x, y) location of m."""
    lam1, lam2, points = cofactor_eigenvalues(u0, ops)
    i = int(np.argmin(lam1))
    return float(lam1[i]), float(lam2.max()), tuple(float(c) for c in points[i])


def estimate_nu(u0: ScalarField, ops: MixedOperators) -> float:
    """
    nu = (m + M) / 2 from the cofactor eigenvalue bounds of H(u0) over the
    points where cof H(u0) is positive definite. Raises NonConvexIterateError
    when more than NONCONVEX_SHARE of the sampled points are not.
    """
    lam1, lam2, points = cofactor_eigenvalues(u0, ops)
    convex = lam1 > 0.0
    if not convex.any() or convex.mean() < 1.0 - NONCONVEX_SHARE:
        i = int(np.argmin(lam1))
        point = tuple(float(c) for c in points[i])
        raise NonConvexIterateError(
            f"iterate is not discretely convex: smallest cofactor eigenvalue {lam1[i]:.3e} "
            f"at ({point[0]:.6g}, {point[1]:.6g}), {np.count_nonzero(~convex)} of {len(lam1)} points",
            point=point, value=float(lam1[i]))
    if not convex.all():
        logger.warning("nu estimate ignores %d of %d points with a non-positive cofactor eigenvalue",
                       np.count_nonzero(~convex), len(lam1))
    m, M = float(lam1[convex].min()), float(lam2[convex].max())
    logger.debug("cofactor eigenvalues in [%.6e, %.6e]", m, M)
    return 0.5 * (m + M)


class MongeAmpereSolver:
    """
    Solver state for one (problem, space) pair: assembled operators, the
    boundary interpolant g_h and the interior load (f, v).
    """

    def __init__(self, problem: Problem, space: LagrangeSpace, config: SolverConfig | None = None,
                 ops: MixedOperators | None = None, threads: int = 1):
        self.problem = problem
        self.space = space
        self.config = SolverConfig() if config is None else config
        self.ops = assemble_mixed_operators(space, threads=threads) if ops is None else ops
        if self.ops.space is not space:
            raise ValueError("operators were assembled on a different space")
        self.boundary = boundary_values(problem.g, space)

    @cached_property
    def f_load(self) -> np.ndarray:
        return assemble_scalar_load(self.problem.f, self.space)[self.space.interior_dofs]

    # ---- data checks ----
    def check_density(self):
        """Rejects f below the positivity floor at any load quadrature point or node."""
        space = self.space
        points = np.concatenate([space.tabulate(load_rule(space)).points.reshape(-1, 2),
                                 space.dof_coordinates])
        values = np.asarray(self.problem.f(points[:, 0], points[:, 1]), dtype=float)
        values = np.broadcast_to(values, points[:, 0].shape)
        bad = np.flatnonzero(~(values >= settings.MIN_DENSITY))
        if len(bad):
            x, y = points[bad[0]]
            raise InvalidProblemError(
                f"f must be at least {settings.MIN_DENSITY:g} on the domain; "
                f"f({x:.6g}, {y:.6g}) = {values[bad[0]]:.6g}")

    # ---- pieces of the iteration ----
    def hessian(self, u: ScalarField) -> MatrixField:
        return discrete_hessian(u, self.ops)

    def residual(self, sigma: MatrixField) -> np.ndarray:
        """(det sigma - f, v) for every interior basis function."""
        return assemble_det_load(sigma, rule=self.ops.rule) - self.f_load

    def residual_norm(self, sigma: MatrixField) -> float:
        return float(np.linalg.norm(self.residual(sigma)))

    def initial_guess(self) -> ScalarField:
        self.check_density()
        space, config = self.space, self.config
        if config.initial_guess is InitialGuess.INTERPOLANT_OF_EXACT:
            if self.problem.exact is None:
                raise InvalidProblemError(
                    f"initial guess {config.initial_guess.value} needs a problem with an exact solution")
            coefficients = interpolate(self.problem.exact, space).coefficients
        else:
            load = assemble_scalar_load(lambda x, y: -2.0 * np.sqrt(self.problem.f(x, y)), space)
            system = apply_dirichlet(self.ops.K, load, space.boundary_dofs, self.boundary)
            coefficients = system.expand(solve_spd(system.matrix, system.rhs))
        coefficients = np.array(coefficients, dtype=float)
        coefficients[space.boundary_dofs] = self.boundary
        if config.perturbation:
            x, y = space.dof_coordinates[space.interior_dofs].T
            coefficients[space.interior_dofs] += config.perturbation * np.sin(np.pi * x) * np.sin(np.pi * y)
        return ScalarField(space, coefficients)

    def _advance(self, u: ScalarField, delta_interior) -> ScalarField:
        coefficients = u.coefficients.copy()
        coefficients[self.space.interior_dofs] += delta_interior
        return ScalarField(self.space, coefficients)

    def time_marching_step(self, u: ScalarField, sigma: MatrixField, nu: float):
        if not nu > 0.0:
            raise ValueError(f"nu must be positive, got {nu}")
        delta = self.ops.interior_stiffness_factorization.solve(self.residual(sigma)) / nu
        u_next = self._advance(u, delta)
        return u_next, self.hessian(u_next)

    def newton_update(self, u: ScalarField, sigma: MatrixField) -> np.ndarray:
        """Interior Newton correction delta u_I of the coupled linearization at (u, sigma)."""
        ops, idx = self.ops, self.space.interior_dofs
        R = ops.hessian_rhs_operator
        hessian_defect = ops.M @ sigma.coefficients - R @ u.coefficients
        jacobian = assemble_newton_jacobian_block(sigma, rule=ops.rule)
        A = sp.bmat([[ops.M, -R[:, idx]], [jacobian, None]], format='csc')
        rhs = np.concatenate([-hessian_defect, -self.residual(sigma)])
        try:
            solution = solve_general(A, rhs)
        except LinearSolveError as exc:
            raise SingularJacobianError(f"Newton system could not be solved: {exc}", residual=exc.residual) from exc
        return solution[ops.M.shape[0]:]

    def newton_step(self, u: ScalarField, sigma: MatrixField, damping: float | None = None):
        damping = self.config.damping if damping is None else damping
        u_next = self._advance(u, damping * self.newton_update(u, sigma))
        return u_next, self.hessian(u_next)

    # ---- driver ----
    def _refresh_nu(self, u: ScalarField, nu: float) -> float:
        try:
            return estimate_nu(u, self.ops)
        except NonConvexIterateError as exc:
            logger.warning("keeping nu=%.6e: %s", nu, exc)
            return nu

    def solve(self) -> SolveResult:
        config = self.config
        method = config.method
        started = time.perf_counter()
        u = self.initial_guess()
        sigma = self.hessian(u)
        residual = self.residual_norm(sigma)
        result = SolveResult(u, sigma, 0, False, method, residual_history=[residual])
        best = (residual, u, sigma, 0)

        nu = None
        if method is Method.TIME_MARCHING:
            nu = estimate_nu(u, self.ops) if config.auto_nu else float(config.nu)
            result.nu_history.append(nu)
        logger.info("solve started method=%s dofs=%d residual=%.6e nu=%s",
                    method.value, self.space.n_dofs, residual, 'n/a' if nu is None else f"{nu:.6e}")

        smallest_increment, streak = np.inf, 0
        for r in range(1, config.iteration_limit + 1):
            try:
                if method is Method.TIME_MARCHING:
                    if config.auto_nu and r > 1 and (r - 1) % config.nu_refresh == 0:
                        nu = self._refresh_nu(u, nu)
                    u_next, sigma_next = self.time_marching_step(u, sigma, nu)
                else:
                    u_next, sigma_next = self.newton_step(u, sigma)
            except SingularJacobianError as exc:
                logger.error("iteration=%d aborted: %s", r, exc)
                result.message = str(exc)
                break

            increment = self.ops.h1_norm(u_next.coefficients - u.coefficients)
            residual = self.residual_norm(sigma_next)
            u, sigma = u_next, sigma_next
            result.iterations = r
            result.residual_history.append(residual)
            result.increment_history.append(increment)
            if nu is not None:
                result.nu_history.append(nu)
            logger.info("iteration=%d method=%s residual=%.6e increment=%.6e nu=%s", r, method.value,
                        residual, increment, 'n/a' if nu is None else f"{nu:.6e}")

            if not (np.isfinite(residual) and np.isfinite(increment)):
                result.message = f"non-finite iterate at iteration {r}"
                break
            if residual < best[0]:
                best = (residual, u, sigma, r)
            if increment <= config.tol_increment and residual <= config.tol_residual:
                result.u, result.sigma, result.converged = u, sigma, True
                result.message = f"converged in {r} iterations"
                break
            if method is Method.TIME_MARCHING:
                smallest_increment = min(smallest_increment, increment)
                streak = streak + 1 if increment > DIVERGENCE_FACTOR * smallest_increment else 0
                if streak >= DIVERGENCE_STREAK:
                    result.message = (f"diverging: increment {increment:.3e} exceeded {DIVERGENCE_FACTOR:g}x "
                                      f"the smallest increment for {streak} steps")
                    logger.warning("iteration=%d %s", r, result.message)
                    break
        else:
            result.message = f"no convergence within {config.iteration_limit} iterations"

        if not result.converged:
            result.u, result.sigma = best[1], best[2]
            logger.warning("solve did not converge (%s); returning iterate %d with residual %.6e",
                           result.message, best[3], best[0])
        logger.info("solve finished converged=%s iterations=%d residual=%.6e seconds=%.3f",
                    result.converged, result.iterations, result.final_residual, time.perf_counter() - started)
        return result


def solve(problem: Problem, space: LagrangeSpace, config: SolverConfig | None = None,
          ops: MixedOperators | None = None, threads: int = 1) -> SolveResult:
    return MongeAmpereSolver(problem, space, config, ops=ops, threads=threads).solve()


def solve_rescaled(problem: Problem, space: LagrangeSpace, config: SolverConfig | None = None,
                   alpha: float = 0.5, ops: MixedOperators | None = None) -> RescaledResult:
    """
    Solve (f, g) and (alpha^2 f, alpha g) on the same space. Since
    det D^2 (alpha u) = alpha^2 det D^2 u, the second solution is alpha times
    the first; ``scale_error`` measures how far the discrete pair is from that.
    """
    if not alpha > 0.0:
        raise ValueError(f"alpha must be positive, got {alpha}")
    ops = assemble_mixed_operators(space) if ops is None else ops
    base = solve(problem, space, config, ops=ops)
    scaled = solve(problem.scaled(alpha), space, config, ops=ops)
    error = ops.h1_norm(scaled.u.coefficients - alpha * base.u.coefficients)
    logger.info("rescaled solve alpha=%g scale_error=%.6e", alpha, error)
    return RescaledResult(alpha, base, scaled, error)
