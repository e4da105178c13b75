"""Finite-dimensional solvers returning decomposable, auditable solutions.

Covers the catalog of classical regularizers: standard-form linear
programs (basic solutions via the Bland simplex), nonnegative least
squares (active set), l1-analysis minimization (projected LP
reformulation), nuclear-norm minimization (Douglas-Rachford with singular
value soft thresholding) and positive semidefinite feasibility with a
facial rank-reduction post-step.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import Infeasible, NonConvergence, NotSurjective
from .geometry import AtomicDecomposition
from .linalg import lstsq, null_space_basis, pseudo_inverse, rank, svd
from .simplex import LpProblem, LpSolution, row_compress, solve_standard_form

__all__ = [
    "LpProblem", "LpSolution", "MatrixProblem", "SplittingConfig",
    "AnalysisReport", "simplex_solve", "nnls_solve", "l1_analysis_solve",
    "nuclear_min_solve", "psd_solve", "rank_reduce_psd",
    "rank1_atomic_decomposition", "barvinok_bound",
]


@dataclass
class MatrixProblem:
    """Affine measurements ``<A_i, M> = trace(A_i^T M) = y_i`` of a matrix."""

    measurement_maps: list
    y: np.ndarray
    shape: tuple

    def __post_init__(self):
        self.measurement_maps = [np.asarray(a, dtype=float)
                                 for a in self.measurement_maps]
        self.y = np.asarray(self.y, dtype=float)
        self.shape = tuple(self.shape)
        if len(self.measurement_maps) != self.y.shape[0]:
            raise ValueError("one measurement map per observation required")
        for a in self.measurement_maps:
            if a.shape != self.shape:
                raise ValueError("measurement map shape mismatch")

    @property
    def m(self) -> int:
        return len(self.measurement_maps)

    def apply(self, M) -> np.ndarray:
        M = np.asarray(M, dtype=float)
        return np.array([float(np.tensordot(a, M)) for a in
                         self.measurement_maps])

    def stacked(self) -> np.ndarray:
        """Measurements as an (m, p*n) matrix acting on vec(M)."""
        return np.vstack([a.reshape(1, -1) for a in self.measurement_maps])


@dataclass
class SplittingConfig:
    """Parameters for the splitting-based matrix solvers."""

    max_iters: int = 50_000
    gamma: float = 1.0
    relaxation: float = 1.0
    eps_feas: float = 1e-7
    eps_gap: float = 1e-5


@dataclass
class AnalysisReport:
    """Structure of an l1-analysis solution ``u = sum a_i Lpinv e_i + u_K``."""

    support: list
    coefficients: np.ndarray
    kernel_component: np.ndarray
    objective: float
    kernel_dim: int
    image_constraint_dim: int  # dim Phi(ker L)


def simplex_solve(prob: LpProblem) -> LpSolution:
    """Basic optimal solution of ``min c.u : Phi u = y, u >= 0``.

    Thin wrapper over the shared simplex kernel; the returned vertex has at
    most ``m`` nonzeros when optimal and carries equality duals plus a
    certified descent ray when unbounded.
    """
    return solve_standard_form(prob.c, prob.A, prob.b)


def nnls_solve(Phi, y, max_iters: int | None = None) -> np.ndarray:
    """Nonnegative least squares by the Lawson-Hanson active-set method.

    Returns a vertex of the optimal face, so the support size never exceeds
    the number of independent rows of ``Phi``. Satisfies the KKT conditions
    ``u >= 0``, ``Phi^T (Phi u - y) >= -tol`` and complementarity at 1e-8
    scale.
    """
    Phi = np.atleast_2d(np.asarray(Phi, dtype=float))
    y = np.asarray(y, dtype=float)
    m, n = Phi.shape
    if max_iters is None:
        max_iters = 10 * n
    tol = 1e-10 * max(1.0, float(np.abs(Phi.T @ y).max(initial=0.0)))

    u = np.zeros(n)
    passive = np.zeros(n, dtype=bool)
    w = Phi.T @ y
    iters = 0
    while True:
        if iters > max_iters:
            raise NonConvergence("active-set iteration cap reached",
                                 payload=u)
        candidates = np.flatnonzero(~passive & (w > tol))
        if candidates.size == 0:
            break
        j = candidates[np.argmax(w[candidates])]
        passive[j] = True
        while True:
            iters += 1
            idx = np.flatnonzero(passive)
            z = np.zeros(n)
            z[idx] = lstsq(Phi[:, idx], y)
            if z[idx].min(initial=1.0) > 0.0:
                u = z
                break
            # Step toward z until the first passive coordinate hits zero.
            neg = idx[z[idx] <= 0.0]
            alpha = np.min(u[neg] / (u[neg] - z[neg]))
            u = u + alpha * (z - u)
            passive[np.abs(u) <= tol] = False
            u[~passive] = 0.0
        w = Phi.T @ (y - Phi @ u)
    return u


def l1_analysis_solve(Phi, y, L):
    """Minimize ``|L u|_1`` subject to ``Phi u = y`` for surjective ``L``.

    The constraints are projected onto the orthogonal complement of
    ``Phi(ker L)`` so the kernel directions drop out, then the analysis
    coefficients ``z = L u`` solve a standard-form LP (positive/negative
    split). A basic LP solution therefore has at most
    ``m - dim(Phi ker L)`` nonzero coefficients; the kernel part is
    recovered by least squares afterwards.

    Returns ``(u, report)``.
    """
    Phi = np.atleast_2d(np.asarray(Phi, dtype=float))
    y = np.asarray(y, dtype=float)
    L = np.atleast_2d(np.asarray(L, dtype=float))
    p, n = L.shape
    m = Phi.shape[0]
    if rank(L) < p:
        raise NotSurjective("analysis operator must have full row rank")

    u_feas = lstsq(Phi, y)
    if np.linalg.norm(Phi @ u_feas - y) > 1e-6 * (1.0 + np.linalg.norm(y)):
        raise Infeasible("no u satisfies Phi u = y")

    Lpinv = pseudo_inverse(L)
    N = null_space_basis(L)  # (n, dim ker L)
    # Significant directions of Phi(ker L), judged against the scale of Phi
    # itself (N is orthonormal, so a numerically zero Phi N must not count).
    phi_scale = svd(Phi).singular_values.max(initial=0.0)
    if N.shape[1]:
        img = svd(Phi @ N)
        d = int(np.count_nonzero(
            img.singular_values > 1e-9 * max(phi_scale, 1e-300)))
    else:
        d = 0
    # Orthonormal basis of the complement of Phi(ker L) inside R^m.
    if d:
        comp = null_space_basis(img.u[:, :d].T)  # (m, m - d)
    else:
        comp = np.eye(m)

    A_proj = comp.T @ (Phi @ Lpinv)
    b_proj = comp.T @ y
    A_red, b_red, _ = row_compress(A_proj, b_proj)
    cols = np.hstack([A_red, -A_red])
    sol = solve_standard_form(np.ones(2 * p), cols, b_red)
    if sol.status != "optimal":
        raise Infeasible(f"analysis LP returned status {sol.status}")
    z = sol.x[:p] - sol.x[p:]

    # Kernel part: make Phi u = y exact again inside ker L.
    if N.shape[1]:
        w = lstsq(Phi @ N, y - Phi @ (Lpinv @ z))
        u_K = N @ w
    else:
        u_K = np.zeros(n)
    u = Lpinv @ z + u_K
    if np.linalg.norm(Phi @ u - y) > 1e-6 * (1.0 + np.linalg.norm(y)):
        raise Infeasible("projected LP solution failed to lift")

    coeffs = L @ u
    support = [int(i) for i in np.flatnonzero(
        np.abs(coeffs) > 1e-9 * (1.0 + np.abs(coeffs).max()))]
    report = AnalysisReport(
        support=support,
        coefficients=coeffs,
        kernel_component=u - Lpinv @ (L @ u),
        objective=float(np.abs(coeffs).sum()),
        kernel_dim=int(N.shape[1]),
        image_constraint_dim=int(d),
    )
    return u, report


def _sv_soft_threshold(M, thresh):
    f = svd(M)
    s = np.maximum(f.singular_values - thresh, 0.0)
    return (f.u * s) @ f.v.T


def _affine_projector(prob: MatrixProblem):
    """Orthogonal projector onto ``{M : <A_i, M> = y_i}``."""
    S = prob.stacked()
    G_pinv = pseudo_inverse(S @ S.T, tol=1e-12)

    def project(M):
        r = prob.apply(M) - prob.y
        corr = (S.T @ (G_pinv @ r)).reshape(prob.shape)
        return M - corr

    return project


def nuclear_min_solve(prob: MatrixProblem,
                      cfg: SplittingConfig | None = None) -> np.ndarray:
    """Minimize the nuclear norm subject to affine measurements.

    Douglas-Rachford splitting alternating singular value soft thresholding
    with projection onto the measurement-consistent affine set. Stops when
    the iterate is feasible to ``cfg.eps_feas`` and the relative duality gap
    (from the projected subgradient certificate) is below ``cfg.eps_gap``.
    """
    cfg = cfg or SplittingConfig()
    if np.linalg.norm(prob.apply(lstsq(prob.stacked(), prob.y)
                                 .reshape(prob.shape)) - prob.y) \
            > 1e-6 * (1.0 + np.linalg.norm(prob.y)):
        raise Infeasible("measurement system is inconsistent")
    project = _affine_projector(prob)
    S = prob.stacked()
    G_pinv = pseudo_inverse(S @ S.T, tol=1e-12)
    yn = np.linalg.norm(prob.y)

    Z = np.zeros(prob.shape)
    M = Z
    for it in range(cfg.max_iters):
        M = _sv_soft_threshold(Z, cfg.gamma)
        Q = project(2.0 * M - Z)
        Z = Z + cfg.relaxation * (Q - M)
        if it % 10 == 0 or it == cfg.max_iters - 1:
            feas = np.linalg.norm(prob.apply(M) - prob.y)
            if feas <= cfg.eps_feas * (1.0 + yn):
                # Dual certificate: project a nuclear-norm subgradient at M
                # onto the span of the measurements and rescale into the
                # spectral unit ball.
                V = (Z - M) / cfg.gamma if cfg.gamma else np.zeros(prob.shape)
                lam = G_pinv @ prob.apply(V)
                At_lam = (S.T @ lam).reshape(prob.shape)
                op = svd(At_lam).singular_values.max(initial=0.0)
                if op > 1.0:
                    lam = lam / op
                primal = svd(M).singular_values.sum()
                gap = primal - float(prob.y @ lam)
                if abs(gap) <= cfg.eps_gap * (1.0 + primal):
                    return M
    raise NonConvergence("nuclear norm solver hit max_iters", payload=M)


def _project_psd(M):
    sym = 0.5 * (M + M.T)
    vals, vecs = np.linalg.eigh(sym)
    return (vecs * np.maximum(vals, 0.0)) @ vecs.T


def barvinok_bound(m: int) -> float:
    """Largest rank r with r(r+1)/2 <= m, in closed form."""
    return 0.5 * (np.sqrt(8.0 * m + 1.0) - 1.0)


def psd_solve(prob: MatrixProblem, cost=None,
              cfg: SplittingConfig | None = None) -> np.ndarray:
    """Feasible PSD matrix for ``<A_i, M> = y_i`` (optionally cost-minimizing).

    Without a cost: alternating projections between the semidefinite cone
    (eigenvalue clamping) and the affine measurement set, followed by the
    facial rank-reduction post-step. With a cost matrix: projected
    subgradient on the feasible set; optimality is best effort and should be
    read from the objective, not assumed.
    """
    cfg = cfg or SplittingConfig()
    n = prob.shape[0]
    if prob.shape[0] != prob.shape[1]:
        raise ValueError("PSD problems require square shape")
    project = _affine_projector(prob)
    yn = np.linalg.norm(prob.y)

    def to_feasible(M, iters):
        for _ in range(iters):
            M = project(_project_psd(M))
            if np.linalg.norm(prob.apply(_project_psd(M)) - prob.y) \
                    <= cfg.eps_feas * (1.0 + yn):
                return _project_psd(M), True
        return _project_psd(M), False

    M, ok = to_feasible(np.zeros((n, n)), cfg.max_iters)
    if not ok:
        raise Infeasible("alternating projections stalled above eps_feas")

    if cost is not None:
        cost = np.asarray(cost, dtype=float)
        step0 = (1.0 + np.abs(prob.y).max()) / max(np.linalg.norm(cost), 1e-12)
        for k in range(1, 201):
            M_try, ok = to_feasible(M - (step0 / np.sqrt(k)) * cost,
                                    cfg.max_iters // 100 + 100)
            if ok and np.tensordot(cost, M_try) <= np.tensordot(cost, M):
                M = M_try
    return rank_reduce_psd(M, prob, cost=cost)


def rank_reduce_psd(M, prob: MatrixProblem, cost=None) -> np.ndarray:
    """Move a feasible PSD matrix to a low-rank face of the feasible set.

    Factor ``M = W W^T``, look for a nonzero symmetric direction ``D`` with
    ``<W^T A_i W, D> = 0`` for all i, and step to the boundary of the cone
    along it; every step drops the rank by at least one and preserves the
    measurements exactly. Stops when no such direction exists, which forces
    ``rank (rank+1) / 2 <= m``. With a ``cost`` matrix, the step direction
    is chosen so the objective never increases; when only the
    objective-increasing side of a direction reaches the cone boundary, the
    reduction stops early instead.
    """
    M = 0.5 * (np.asarray(M, dtype=float) + np.asarray(M, dtype=float).T)
    if cost is not None:
        cost = 0.5 * (np.asarray(cost, dtype=float)
                      + np.asarray(cost, dtype=float).T)
    while True:
        vals, vecs = np.linalg.eigh(M)
        vmax = vals.max(initial=0.0)
        keep = vals > max(vmax, 1.0) * 1e-11
        r = int(np.count_nonzero(keep))
        if r == 0:
            return np.zeros_like(M)
        W = vecs[:, keep] * np.sqrt(vals[keep])
        # Rows: svec of the compressed maps W^T A_i W.
        iu = np.triu_indices(r)
        rows = []
        for A in prob.measurement_maps:
            B = W.T @ (0.5 * (A + A.T)) @ W
            scale = np.where(iu[0] == iu[1], 1.0, 2.0)
            rows.append(B[iu] * scale)
        null = null_space_basis(np.vstack(rows), tol=1e-9)
        if null.shape[1] == 0:
            return M
        D = np.zeros((r, r))
        D[iu] = null[:, 0]
        D = D + D.T - np.diag(np.diag(D))
        eigs = np.linalg.eigvalsh(D)
        if cost is not None:
            # objective along M(t) = W (I - t D) W^T is affine with slope
            # -<cost, W D W^T>; keep the sign that does not increase it.
            slope = float(np.tensordot(cost, W @ D @ W.T))
            if slope < 0.0:
                D = -D
                eigs = -eigs[::-1]
                slope = -slope
            if eigs.max() <= 1e-14:
                return M  # boundary only reachable by increasing the cost
        else:
            if eigs.max() <= 0.0:
                D = -D
                eigs = -eigs[::-1]
        M = W @ (np.eye(r) - D / eigs.max()) @ W.T
        M = 0.5 * (M + M.T)


def rank1_atomic_decomposition(M, tol: float = 1e-9) -> AtomicDecomposition:
    """Express ``M`` over unit-norm rank-one atoms via its SVD.

    Atoms are ``|M|_* u_i v_i^T`` flattened row-major, with weights
    ``s_i / |M|_*``, so ``M / |M|_*`` is a convex combination of extreme
    points of the nuclear-norm unit ball. The zero matrix yields an empty
    decomposition.
    """
    M = np.atleast_2d(np.asarray(M, dtype=float))
    f = svd(M)
    s = f.singular_values
    if s.size == 0 or s.max(initial=0.0) <= 0.0:
        return AtomicDecomposition()
    keep = s > tol * s[0]
    total = float(s[keep].sum())
    atoms = []
    for i in np.flatnonzero(keep):
        atom = total * np.outer(f.u[:, i], f.v[:, i])
        atoms.append((atom.reshape(-1), float(s[i] / total)))
    return AtomicDecomposition(point_atoms=atoms)
