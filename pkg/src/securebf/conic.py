"""A small conic-program IR with one complex Hermitian matrix variable.

The Hermitian variable ``W = X + jY`` is parametrized by the N^2 real
numbers X_ij (i <= j) and Y_ij (i < j), so Hermitian structure holds by
construction and ``W >= 0`` becomes a PSD constraint on the real
embedding [[X, -Y], [Y, X]]. Every constraint is affine in the stacked
real variable vector and is compiled to Clarabel's standard form
``A x + s = b, s in K``.
"""
from __future__ import annotations

import io
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
NUMERICAL_FAILURE = "numerical-failure"
ITERATION_LIMIT = "iteration-limit"


class ZeroBeamformerError(ValueError):
    pass


def embed_hermitian(H: np.ndarray, tol: float = 1e-10) -> np.ndarray:
    """Real symmetric 2n x 2n embedding [[Re H, -Im H], [Im H, Re H]]."""
    H = np.asarray(H, dtype=complex)
    if H.ndim != 2 or H.shape[0] != H.shape[1]:
        raise ValueError("expected a square matrix")
    if np.abs(H - H.conj().T).max(initial=0.0) > tol * max(1.0, np.abs(H).max(initial=0.0)):
        raise ValueError("matrix is not Hermitian")
    return _embed(H)


def _embed(H):
    # works on (..., n, n) stacks without the Hermitian check
    re, im = H.real, H.imag
    top = np.concatenate([re, -im], axis=-1)
    bot = np.concatenate([im, re], axis=-1)
    return np.concatenate([top, bot], axis=-2)


def unembed_hermitian(S: np.ndarray) -> np.ndarray:
    """Inverse of ``embed_hermitian`` (averages the redundant blocks)."""
    n = S.shape[0] // 2
    re = (S[:n, :n] + S[n:, n:]) / 2
    im = (S[n:, :n] - S[:n, n:]) / 2
    return re + 1j * im


def extract_rank1(W: np.ndarray, tol: float = 1e-12):
    """Principal-eigenvector beamformer sqrt(lambda_max) u_max and the gap Tr(W) - lambda_max."""
    W = np.asarray(W, dtype=complex)
    W = (W + W.conj().T) / 2
    lam, U = np.linalg.eigh(W)
    lmax = lam[-1]
    if lmax <= tol * max(1.0, np.abs(W).max(initial=0.0)):
        raise ZeroBeamformerError("matrix has no positive eigenvalue; no beamformer to extract")
    w = np.sqrt(lmax) * U[:, -1]
    # fix global phase so the first nonzero entry is real positive
    k = int(np.argmax(np.abs(w) > 1e-12 * np.abs(w).max()))
    w = w * np.exp(-1j * np.angle(w[k]))
    gap = max(float(np.real(np.trace(W)) - lmax), 0.0)
    return w, gap


def rank1_gap(W: np.ndarray) -> float:
    W = (np.asarray(W) + np.asarray(W).conj().T) / 2
    return float(np.real(np.trace(W)) - np.linalg.eigvalsh(W)[-1])


# --------------------------------------------------------------------------
# affine expressions


def _pad(coef: np.ndarray, nv: int, axis: int) -> np.ndarray:
    extra = nv - coef.shape[axis]
    if extra <= 0:
        return coef
    width = [(0, 0)] * coef.ndim
    width[axis] = (0, extra)
    return np.pad(coef, width)


class Lin:
    """Real vector-valued affine expression ``coef @ x + const``."""

    __array_ufunc__ = None  # make numpy scalars defer to __rmul__/__radd__

    def __init__(self, coef, const):
        self.coef = np.atleast_2d(np.asarray(coef, dtype=float))
        self.const = np.atleast_1d(np.asarray(const, dtype=float))

    @classmethod
    def constant(cls, value) -> "Lin":
        value = np.atleast_1d(np.asarray(value, dtype=float))
        return cls(np.zeros((value.size, 0)), value)

    @property
    def size(self) -> int:
        return self.const.size

    def _align(self, other):
        if not isinstance(other, Lin):
            other = Lin.constant(np.broadcast_to(np.asarray(other, dtype=float), (self.size,)))
        nv = max(self.coef.shape[1], other.coef.shape[1])
        return _pad(self.coef, nv, 1), _pad(other.coef, nv, 1), other

    def __add__(self, other):
        a, b, other = self._align(other)
        return Lin(a + b, self.const + other.const)

    __radd__ = __add__

    def __neg__(self):
        return Lin(-self.coef, -self.const)

    def __sub__(self, other):
        return self + (-other if isinstance(other, Lin) else -np.asarray(other, dtype=float))

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, k):
        k = float(k)
        return Lin(k * self.coef, k * self.const)

    __rmul__ = __mul__

    def __getitem__(self, idx):
        return Lin(self.coef[idx], self.const[idx])

    def value(self, x: np.ndarray) -> np.ndarray:
        return _pad(self.coef, x.size, 1) @ x + self.const

    @staticmethod
    def stack(parts) -> "Lin":
        nv = max(p.coef.shape[1] for p in parts)
        return Lin(np.vstack([_pad(p.coef, nv, 1) for p in parts]), np.concatenate([p.const for p in parts]))


class Herm:
    """Complex Hermitian-matrix-valued affine expression ``sum_i x_i C_i + C_0``."""

    __array_ufunc__ = None

    def __init__(self, coef, const):
        self.coef = np.asarray(coef, dtype=complex)
        self.const = np.asarray(const, dtype=complex)

    @property
    def n(self) -> int:
        return self.const.shape[0]

    def _align(self, other):
        nv = max(self.coef.shape[0], other.coef.shape[0])
        return _pad(self.coef, nv, 0), _pad(other.coef, nv, 0)

    def __add__(self, other):
        if not isinstance(other, Herm):
            return Herm(self.coef, self.const + other)
        a, b = self._align(other)
        return Herm(a + b, self.const + other.const)

    def __neg__(self):
        return Herm(-self.coef, -self.const)

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, k):
        k = float(k)
        return Herm(k * self.coef, k * self.const)

    __rmul__ = __mul__

    def congruence(self, S: np.ndarray) -> "Herm":
        """S^H (.) S."""
        Sh = S.conj().T
        return Herm(Sh @ self.coef @ S, Sh @ self.const @ S)

    def trace(self) -> Lin:
        return Lin(np.trace(self.coef, axis1=1, axis2=2).real[None, :], [np.trace(self.const).real])

    def quad(self, h: np.ndarray) -> Lin:
        """h^H (.) h."""
        hc = h.conj()
        return Lin(np.einsum("i,kij,j->k", hc, self.coef, h).real[None, :], [np.real(hc @ self.const @ h)])

    def inner(self, A: np.ndarray) -> Lin:
        """Real part of <A, .> = Tr(A (.)^H)."""
        return Lin(np.einsum("ij,kij->k", A, self.coef.conj()).real[None, :], [np.real(np.sum(A * self.const.conj()))])

    def matvec(self, S: np.ndarray, h: np.ndarray) -> Lin:
        """S (.) h as a real vector [Re; Im] of length 2n."""
        c = np.einsum("ij,kjl,l->ik", S, self.coef, h)
        k = S @ self.const @ h
        return Lin(np.vstack([c.real, c.imag]), np.concatenate([k.real, k.imag]))

    def vec(self) -> Lin:
        """Column-stacked vec, real and imaginary parts concatenated."""
        c = self.coef.transpose(0, 2, 1).reshape(self.coef.shape[0], self.n * self.n).T
        k = self.const.T.reshape(-1)
        return Lin(np.vstack([c.real, c.imag]), np.concatenate([k.real, k.imag]))

    def hvec(self) -> Lin:
        """Non-redundant real vector with the same 2-norm as ``vec``.

        Diagonal entries, then sqrt(2) times real and imaginary parts of the
        strict upper triangle.
        """
        iu, ju = np.triu_indices(self.n, 1)
        di = np.arange(self.n)
        c, k = self.coef, self.const
        r2 = np.sqrt(2.0)
        coef = np.hstack([c[:, di, di].real, r2 * c[:, iu, ju].real, r2 * c[:, iu, ju].imag]).T
        const = np.concatenate([k[di, di].real, r2 * k[iu, ju].real, r2 * k[iu, ju].imag])
        return Lin(coef, const)

    @classmethod
    def scaled_identity(cls, s: Lin, n: int) -> "Herm":
        """s * I_n for a scalar affine ``s``."""
        eye = np.eye(n)
        return cls(s.coef[0][:, None, None] * eye, s.const[0] * eye)

    def value(self, x: np.ndarray) -> np.ndarray:
        return np.tensordot(x[: self.coef.shape[0]], self.coef[: x.size], axes=1) + self.const


# --------------------------------------------------------------------------
# program


@dataclass
class Block:
    name: str
    kind: str  # "linear-inequality" | "second-order-cone" | "psd-cone" | "equality"
    expr: Lin  # entries of the conic slack, in the cone's own vectorization
    dim: int  # cone dimension (matrix order for psd-cone)

    def violation(self, x: np.ndarray) -> float:
        s = self.expr.value(x)
        if self.kind == "equality":
            return float(np.abs(s).max(initial=0.0))
        if self.kind == "linear-inequality":
            return float(max(0.0, -s.min(initial=0.0)))
        if self.kind == "second-order-cone":
            return float(max(0.0, np.linalg.norm(s[1:]) - s[0]))
        M = _svec_to_mat(s, self.dim)
        return float(max(0.0, -np.linalg.eigvalsh(M)[0]))


def _svec_indices(d: int):
    # upper triangle, column-major: (0,0), (0,1), (1,1), (0,2), ...
    rows, cols = [], []
    for j in range(d):
        for i in range(j + 1):
            rows.append(i)
            cols.append(j)
    return np.array(rows), np.array(cols)


def _svec(mats: np.ndarray) -> np.ndarray:
    """Scaled upper-triangular vectorization of (..., d, d) symmetric matrices."""
    d = mats.shape[-1]
    r, c = _svec_indices(d)
    scale = np.where(r == c, 1.0, np.sqrt(2.0))
    return mats[..., r, c] * scale


def _svec_to_mat(v: np.ndarray, d: int) -> np.ndarray:
    r, c = _svec_indices(d)
    scale = np.where(r == c, 1.0, 1 / np.sqrt(2.0))
    M = np.zeros((d, d))
    M[r, c] = v * scale
    M[c, r] = v * scale
    return M


@dataclass
class SolverOptions:
    feas_tol: float = 1e-7
    gap_tol: float = 1e-7
    max_iter: int = 200
    # internal Clarabel tolerances; tighter than the targets above
    inner_tol: float = 1e-9
    # Degenerate SDPs (rank-deficient optimal W) routinely stall a little
    # short of the targets. A stalled point is still accepted when the
    # independently recomputed residuals stay below these.
    verify_feas_tol: float = 1e-5
    verify_gap_tol: float = 1e-5


@dataclass
class SolveReport:
    status: str
    x: np.ndarray | None
    values: dict
    objective: float | None
    primal_residual: float | None
    dual_residual: float | None
    gap: float | None
    iterations: int
    solver_status: str
    block_violations: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return self.status == OPTIMAL


class ConicProgram:
    """Linear objective over scalars plus at most one Hermitian matrix variable."""

    def __init__(self):
        self.n_vars = 0
        self.variables: dict[str, tuple[int, int, str]] = {}  # name -> (offset, size, kind)
        self.blocks: list[Block] = []
        self.objective = Lin.constant(0.0)
        self.sense = "min"
        self._herm_n: dict[str, int] = {}
        self.shared_terms: list = []  # builder-level cache for reusable sub-expressions

    # -- variables -------------------------------------------------------
    def _alloc(self, name, size, kind):
        if name in self.variables:
            raise ValueError(f"variable {name!r} already declared")
        off = self.n_vars
        self.variables[name] = (off, size, kind)
        self.n_vars += size
        return off

    def scalar(self, name: str) -> Lin:
        off = self._alloc(name, 1, "scalar")
        coef = np.zeros((1, self.n_vars))
        coef[0, off] = 1.0
        return Lin(coef, [0.0])

    def hermitian(self, name: str, n: int, psd: bool = True) -> Herm:
        off = self._alloc(name, n * n, "hermitian")
        self._herm_n[name] = n
        coef = np.zeros((self.n_vars, n, n), dtype=complex)
        p = off
        for j in range(n):
            for i in range(j + 1):
                coef[p, i, j] = 1.0
                coef[p, j, i] = 1.0
                p += 1
        for j in range(n):
            for i in range(j):
                coef[p, i, j] = 1j
                coef[p, j, i] = -1j
                p += 1
        W = Herm(coef, np.zeros((n, n)))
        if psd:
            self.add_psd(W, f"{name}>=0")
        return W

    # -- constraints -----------------------------------------------------
    def add_nonneg(self, expr: Lin, name: str):
        """expr >= 0 elementwise."""
        self.blocks.append(Block(name, "linear-inequality", expr, expr.size))

    def add_le(self, lhs, rhs, name: str):
        self.add_nonneg(_as_lin(rhs) - lhs, name)

    def add_eq(self, expr: Lin, name: str):
        self.blocks.append(Block(name, "equality", expr, expr.size))

    def add_soc(self, t: Lin, x: Lin, name: str):
        """||x||_2 <= t."""
        self.blocks.append(Block(name, "second-order-cone", Lin.stack([t, x]), 1 + x.size))

    def add_psd(self, H: Herm, name: str):
        """Hermitian affine matrix H >= 0, emitted on its real embedding."""
        emb_coef = _embed(H.coef)
        emb_const = _embed(H.const)
        d = 2 * H.n
        self.blocks.append(Block(name, "psd-cone", Lin(_svec(emb_coef).T, _svec(emb_const)), d))

    def minimize(self, expr: Lin):
        self.objective, self.sense = expr, "min"

    def maximize(self, expr: Lin):
        self.objective, self.sense = expr, "max"

    # -- compile / solve -------------------------------------------------
    def standard_form(self):
        """(q, A, b, cones) with A x + s = b; cones as (kind, dim) in block order."""
        nv = self.n_vars
        rows, bs, cones = [], [], []
        for blk in self.blocks:
            rows.append(-_pad(blk.expr.coef, nv, 1))
            bs.append(blk.expr.const)
            cones.append((blk.kind, blk.dim))
        A = np.vstack(rows) if rows else np.zeros((0, nv))
        b = np.concatenate(bs) if bs else np.zeros(0)
        sign = 1.0 if self.sense == "min" else -1.0
        q = sign * _pad(self.objective.coef, nv, 1)[0]
        return q, A, b, cones

    def dump_triplets(self) -> str:
        """Plain-text sparse-triplet dump of the standard form."""
        q, A, b, cones = self.standard_form()
        out = io.StringIO()
        out.write(f"# vars {self.n_vars} rows {A.shape[0]} sense min\n")
        for name, (off, size, kind) in self.variables.items():
            out.write(f"var {name} {kind} {off} {size}\n")
        for kind, dim in cones:
            out.write(f"cone {kind} {dim}\n")
        for j in np.flatnonzero(q):
            out.write(f"c {j} {q[j]:.17g}\n")
        Ac = sp.coo_matrix(A)
        for i, j, v in zip(Ac.row, Ac.col, Ac.data):
            out.write(f"A {i} {j} {v:.17g}\n")
        for i in np.flatnonzero(b):
            out.write(f"b {i} {b[i]:.17g}\n")
        return out.getvalue()

    def unpack(self, x: np.ndarray) -> dict:
        vals = {}
        for name, (off, size, kind) in self.variables.items():
            if kind == "scalar":
                vals[name] = float(x[off])
            else:
                n = self._herm_n[name]
                vals[name] = self._herm_value(x, off, n)
        return vals

    @staticmethod
    def _herm_value(x, off, n):
        W = np.zeros((n, n), dtype=complex)
        p = off
        for j in range(n):
            for i in range(j + 1):
                W[i, j] += x[p]
                if i != j:
                    W[j, i] += x[p]
                p += 1
        for j in range(n):
            for i in range(j):
                W[i, j] += 1j * x[p]
                W[j, i] -= 1j * x[p]
                p += 1
        return W

    def solve(self, options: SolverOptions | None = None) -> SolveReport:
        return solve(self, options)


def _as_lin(v) -> Lin:
    return v if isinstance(v, Lin) else Lin.constant(v)


def _clarabel_cones(cones):
    import clarabel

    out = []
    for kind, dim in cones:
        if kind == "equality":
            out.append(clarabel.ZeroConeT(dim))
        elif kind == "linear-inequality":
            out.append(clarabel.NonnegativeConeT(dim))
        elif kind == "second-order-cone":
            out.append(clarabel.SecondOrderConeT(dim))
        else:
            out.append(clarabel.PSDTriangleConeT(dim))
    return out


_STATUS_MAP = {
    "Solved": OPTIMAL,
    "AlmostSolved": OPTIMAL,  # re-checked against residuals below
    "PrimalInfeasible": INFEASIBLE,
    "AlmostPrimalInfeasible": INFEASIBLE,
    "MaxIterations": ITERATION_LIMIT,
    "MaxTime": ITERATION_LIMIT,
}


def _block_scales(prog: ConicProgram, nv: int) -> list:
    """Positive scale per block (per row for linear blocks) giving unit max coefficient."""
    out = []
    for blk in prog.blocks:
        c = np.abs(_pad(blk.expr.coef, nv, 1))
        if blk.kind in ("linear-inequality", "equality"):
            rowmax = c.max(axis=1, initial=0.0)
            out.append(np.where(rowmax > 0, rowmax, 1.0))
        else:
            m = c.max(initial=0.0)
            out.append(np.full(blk.expr.size, m if m > 0 else 1.0))
    return out


def _clarabel_solve(q, A, b, cones, opts: SolverOptions):
    import clarabel

    settings = clarabel.DefaultSettings()
    settings.verbose = False
    settings.max_iter = opts.max_iter
    settings.tol_feas = min(opts.inner_tol, opts.feas_tol)
    settings.tol_gap_abs = opts.inner_tol
    settings.tol_gap_rel = opts.inner_tol
    settings.presolve_enable = False
    n = A.shape[1]
    solver = clarabel.DefaultSolver(sp.csc_matrix((n, n)), q, sp.csc_matrix(A), b, _clarabel_cones(cones), settings)
    sol = solver.solve()
    return sol, str(sol.status).split(".")[-1]


def _cone_identity(cones) -> np.ndarray:
    parts = []
    for kind, dim in cones:
        if kind == "equality":
            parts.append(np.zeros(dim))
        elif kind == "linear-inequality":
            parts.append(np.ones(dim))
        elif kind == "second-order-cone":
            e = np.zeros(dim)
            e[0] = 1.0
            parts.append(e)
        else:
            parts.append(_svec(np.eye(dim)))
    return np.concatenate(parts) if parts else np.zeros(0)


def phase_one_margin(A, b, cones, opts: SolverOptions) -> float | None:
    """min t such that b - A x + t e lies in the cone, with t >= -1.

    ``e`` is the identity of each cone, so the program is always strictly
    feasible and bounded. A positive optimum means the original
    constraints are infeasible by that normalized margin. Returns None if
    even this well-posed program fails.
    """
    e = _cone_identity(cones)
    n = A.shape[1]
    A1 = np.vstack([np.hstack([A, -e[:, None]]), np.eye(1, n + 1, n) * -1.0])
    b1 = np.concatenate([b, [1.0]])
    q1 = np.zeros(n + 1)
    q1[-1] = 1.0
    sol, raw = _clarabel_solve(q1, A1, b1, list(cones) + [("linear-inequality", 1)], opts)
    if raw not in ("Solved", "AlmostSolved"):
        return None
    return float(sol.x[-1])


def solve(prog: ConicProgram, options: SolverOptions | None = None) -> SolveReport:
    """Solve with Clarabel, then verify every block independently.

    Blocks are normalized to unit maximum coefficient and columns to unit
    maximum magnitude before the call; feasibility residuals are reported
    on the normalized blocks. A solver "optimal" whose recomputed
    violations exceed the verification tolerances is downgraded to
    numerical-failure. When the solver gives up without a certificate, a
    phase-one program decides whether the constraints are infeasible.
    """
    opts = options or SolverOptions()
    q, A, b, cones = prog.standard_form()
    scales = _block_scales(prog, prog.n_vars)
    r = np.concatenate(scales) if scales else np.zeros(0)
    A = A / r[:, None]
    b = b / r
    col = np.abs(A).max(axis=0, initial=0.0)
    col = np.where(col > 0, 1.0 / col, 1.0)
    A = A * col
    q = q * col
    q_scale = max(np.abs(q).max(initial=0.0), 1e-300)
    q = q / q_scale

    sol, raw = _clarabel_solve(q, A, b, cones, opts)
    status = _STATUS_MAP.get(raw, NUMERICAL_FAILURE)
    if status in (NUMERICAL_FAILURE, ITERATION_LIMIT):
        margin = phase_one_margin(A, b, cones, opts)
        if margin is not None and margin > opts.verify_feas_tol:
            return SolveReport(INFEASIBLE, None, {}, None, margin, None, None, sol.iterations, raw + "+phase-one")
    if status != OPTIMAL:
        return SolveReport(status, None, {}, None, None, None, None, sol.iterations, raw)
    x = np.asarray(sol.x, dtype=float) * col

    violations = {}
    for blk, sc in zip(prog.blocks, scales):
        if blk.kind in ("linear-inequality", "equality"):
            s = blk.expr.value(x) / sc
            v = float(np.abs(s).max(initial=0.0)) if blk.kind == "equality" else float(max(0.0, -s.min(initial=0.0)))
        else:
            v = blk.violation(x) / sc[0]
        violations[blk.name] = v
    primal = max(violations.values(), default=0.0)
    obj = float(prog.objective.value(x)[0])
    # duality gap of the normalized problem
    gap = abs(sol.obj_val - sol.obj_val_dual) / max(1.0, abs(sol.obj_val))
    if primal > max(opts.feas_tol, opts.verify_feas_tol) or gap > max(opts.gap_tol, opts.verify_gap_tol):
        status = NUMERICAL_FAILURE
    return SolveReport(
        status=status,
        x=x,
        values=prog.unpack(x),
        objective=obj,
        primal_residual=primal,
        dual_residual=float(sol.r_dual),
        gap=float(gap),
        iterations=sol.iterations,
        solver_status=raw,
        block_violations=violations,
    )
