"""Connes distance, Fejer smoothing, and convergence diagnostics."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
import scipy.sparse as sp
from scipy.linalg import null_space
from scipy.optimize import minimize
from scipy.special import logsumexp, softmax

from ._linalg import spectral_norm
from .dirac import SCHEMA_VERSION, commutator_matrix, dirac_spectrum, lip, lip_exact_generator
from .errors import ConfigError, SolverError
from .padic import GroupElement, ball
from .twisted import (CocycleSpec, FourierPolynomial, TruncationSpec, _element_key, lambda_matrix,
                      random_self_adjoint)


# ---------------------------------------------------------------- states

@dataclass
class StateSpec:
    """Vector state phi(a) = <xi, a xi> for a finitely supported unit xi in l^2(G) (x) E.

    ``kind == "trace"`` is the vector state at delta_0 (x) e, i.e. phi(g) = [g == 0].
    """

    kind: str
    cocycle: CocycleSpec
    xi: dict = field(default_factory=dict)
    _cache: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if self.kind not in ("trace", "vector"):
            raise ConfigError(f"unknown state kind {self.kind!r}")
        if self.kind == "vector":
            if not self.xi:
                raise ConfigError("vector state needs a nonzero xi")
            xi = {g: np.asarray(v, dtype=complex) for g, v in self.xi.items()}
            norm = np.sqrt(sum(float(np.vdot(v, v).real) for v in xi.values()))
            if norm == 0:
                raise ConfigError("vector state needs a nonzero xi")
            self.xi = {g: v / norm for g, v in xi.items() if np.any(v != 0)}

    @classmethod
    def trace(cls, cocycle: CocycleSpec) -> StateSpec:
        return cls("trace", cocycle)

    @classmethod
    def vector(cls, cocycle: CocycleSpec, xi: dict) -> StateSpec:
        return cls("vector", cocycle, dict(xi))

    @classmethod
    def random_vector(cls, cocycle: CocycleSpec, support, dim_E: int,
                      rng: np.random.Generator) -> StateSpec:
        xi = {}
        for g in support:
            xi[g] = rng.standard_normal(dim_E) + 1j * rng.standard_normal(dim_E)
        return cls("vector", cocycle, xi)

    def __call__(self, g: GroupElement) -> complex:
        """phi(g) = <xi, lambda(g) xi> = sum_h <xi(h), sigma(g, h - g) xi(h - g)>."""
        if self.kind == "trace":
            return 1.0 + 0j if g.is_zero() else 0j
        if g in self._cache:
            return self._cache[g]
        total = 0j
        for h, v in self.xi.items():
            src = h - g
            w = self.xi.get(src)
            if w is not None:
                total += self.cocycle(g, src) * np.vdot(v, w)
        self._cache[g] = complex(total)
        return self._cache[g]

    def evaluate(self, f: FourierPolynomial) -> complex:
        return complex(sum(c * self(g) for g, c in f.items()))

    def gram_matrix(self, points) -> np.ndarray:
        """[<lambda(g) xi, lambda(h) xi>] = [sigma(-g, h) phi(h - g)], positive semidefinite."""
        pts = list(points)
        n = len(pts)
        G = np.empty((n, n), dtype=complex)
        for a, g in enumerate(pts):
            for b, h in enumerate(pts):
                G[a, b] = self.cocycle(-g, h) * self(h - g)
        return G

    def to_json(self) -> dict:
        if self.kind == "trace":
            return {"kind": "trace"}
        return {"kind": "vector",
                "xi": [{"g": g.to_pairs(), "v": [[float(z.real), float(z.imag)] for z in v]}
                       for g, v in sorted(self.xi.items(), key=lambda kv: kv[0].fractions())]}

    @classmethod
    def from_json(cls, data: dict, cocycle: CocycleSpec) -> StateSpec:
        if data["kind"] == "trace":
            return cls.trace(cocycle)
        xi = {GroupElement.from_pairs(cocycle.p, t["g"]): np.array([complex(a, b) for a, b in t["v"]])
              for t in data["xi"]}
        return cls.vector(cocycle, xi)


# ---------------------------------------------------------------- Fejer

@dataclass(frozen=True)
class FejerSpec:
    """Product Fejer weights w_N(g) = prod_j max(0, 1 - |p^n x_j(g)| / N) on G_n, zero off G_n."""

    n: int
    N: int

    def __post_init__(self):
        if self.N < 1:
            raise ConfigError("Fejer order N must be >= 1")
        if self.n < 0:
            raise ConfigError("level must be >= 0")

    def weight_exact(self, g: GroupElement) -> Fraction:
        if g.level > self.n:
            return Fraction(0)
        w = Fraction(1)
        for a in g.lattice(self.n):
            w *= Fraction(max(0, self.N - abs(a)), self.N)
        return w

    def weight(self, g: GroupElement) -> float:
        return float(self.weight_exact(g))


def fejer_smooth(f: FourierPolynomial, spec: FejerSpec) -> FourierPolynomial:
    """Coefficientwise multiplication by the Fejer weights; drops everything off G_n."""
    return FourierPolynomial(f.cocycle, {g: spec.weight(g) * c for g, c in f.coeffs.items()})


def fejer_kernel(N: int, d: int, grid: int) -> np.ndarray:
    """Product Fejer kernel on the dual torus [0,1)^d sampled on a grid^d mesh."""
    t = np.arange(grid) / grid
    k = np.arange(N)
    one = np.abs(np.exp(2j * np.pi * np.outer(t, k)).sum(axis=1)) ** 2 / N
    out = one
    for _ in range(d - 1):
        out = np.multiply.outer(out, one)
    return out


@dataclass
class ContractionReport:
    lip_original: float
    lip_smoothed: float
    tol: float

    @property
    def passed(self) -> bool:
        return self.lip_smoothed <= self.lip_original * (1 + self.tol)

    def to_json(self) -> dict:
        return {"schema": SCHEMA_VERSION, "lip_original": self.lip_original,
                "lip_smoothed": self.lip_smoothed, "tol": self.tol, "pass": self.passed}


def fejer_lip_contraction_check(f: FourierPolynomial, spec: FejerSpec, T: TruncationSpec,
                                tol: float = 1e-6) -> ContractionReport:
    if not f.is_self_adjoint(1e-12):
        raise ConfigError("contraction check expects a self-adjoint polynomial")
    return ContractionReport(lip(f, T), lip(fejer_smooth(f, spec), T), tol)


# ---------------------------------------------------------------- distance

@dataclass
class DistanceResult:
    value: float
    mode: str
    certificate: FourierPolynomial | None
    degenerate: bool = False
    residual: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "schema": SCHEMA_VERSION,
            "value": self.value,
            "mode": self.mode,
            "degenerate": self.degenerate,
            "residual": self.residual,
            "certificate": None if self.certificate is None else self.certificate.to_json(),
        }


@dataclass
class _ListTable:
    elements: list


def pair_representatives(table) -> list[GroupElement]:
    """One element from each pair {g, -g}, g != 0, in ball order."""
    seen, reps = set(), []
    for g in table.elements:
        if g.is_zero() or g in seen:
            continue
        seen.add(g)
        seen.add(-g)
        reps.append(g)
    return reps


def _certified_lower(reps, delta, cocycle) -> DistanceResult:
    best, arg = 0.0, None
    for g, dg in zip(reps, delta):
        if abs(dg) == 0:
            continue
        v = abs(dg) / lip_exact_generator(g)
        if v > best:
            best, arg = v, (g, dg)
    if arg is None:
        return DistanceResult(0.0, "certified_lower", FourierPolynomial.zero(cocycle), degenerate=True)
    g, dg = arg
    c = np.conj(dg) / abs(dg) / (2 * lip_exact_generator(g))
    cert = FourierPolynomial(cocycle, {g: c, -g: np.conj(c)})
    return DistanceResult(float(best), "certified_lower", cert)


def _pair_basis(reps, cocycle, T):
    """Commutator matrices of delta_g + delta_-g and i delta_g - i delta_-g on T."""
    mats = []
    for g in reps:
        re = FourierPolynomial(cocycle, {g: 1.0, -g: 1.0})
        im = FourierPolynomial(cocycle, {g: 1j, -g: -1j})
        mats.append(commutator_matrix(re, T).matrix)
        mats.append(commutator_matrix(im, T).matrix)
    return mats


@dataclass
class SolverOptions:
    method: str = "smoothed"
    max_iter: int = 2000
    tol: float = 1e-6  # smoothing target, relative to the starting norm
    gap_tol: float = 1e-4  # largest accepted duality gap, relative to max(1, value)
    polyak_target: float | None = None  # known optimal norm, enables Polyak steps


def _stack_dense(mats) -> np.ndarray:
    # restrict to rows/cols touched by any basis matrix
    union = sp.csr_matrix(mats[0].shape, dtype=float)
    for M in mats:
        union = union + abs(M)
    touched = np.unique(np.concatenate([union.nonzero()[0], union.nonzero()[1]]))
    return np.array([M[touched][:, touched].toarray() for M in mats])


def _gauge_min_smoothed(B: np.ndarray, c: np.ndarray, opts: SolverOptions):
    """Minimise the spectral norm of sum_i x_i B_i over the hyperplane <c, x> = 1.

    The norm is replaced by mu * logsumexp(singular values / mu), driven to
    small mu by continuation with L-BFGS.  Returns the best x by true norm.
    """
    x0 = c / (c @ c)
    Q = null_space(c[None, :])

    def norm_of(x):
        return float(np.linalg.norm(np.tensordot(x, B, axes=1), 2))

    best = {"x": x0, "N": norm_of(x0)}
    scale = best["N"]
    last_grad = {"g": None}

    def fun(z, mu):
        x = x0 + Q @ z
        U, s, Vh = np.linalg.svd(np.tensordot(x, B, axes=1))
        if s[0] < best["N"]:
            best["x"], best["N"] = x, float(s[0])
        val = mu * logsumexp(s / mu)
        w = softmax(s / mu)
        W = (U * w) @ Vh
        gx = np.real(np.tensordot(B, W.conj(), axes=([1, 2], [0, 1])))
        last_grad["g"] = gx
        return val, Q.T @ gx

    z = np.zeros(Q.shape[1])
    mu = 0.05 * scale
    mu_min = max(opts.tol * scale * 1e-3, 1e-13)
    evals = 0
    while True:
        if Q.shape[1] == 0:
            fun(z, mu)
            break
        res = minimize(fun, z, args=(mu,), jac=True, method="L-BFGS-B",
                       options={"maxiter": opts.max_iter, "gtol": 1e-12, "ftol": 1e-15})
        z = res.x
        evals += res.nfev
        if mu <= mu_min:
            break
        mu = max(mu / 10, mu_min)
    fun(z, mu)
    alpha, stationarity = _dual_bound(B, c, best["x"])
    return best["x"], best["N"], alpha, stationarity, evals


def _project_spectraplex(Z: np.ndarray) -> np.ndarray:
    """Euclidean projection of a Hermitian matrix onto {Z >= 0, tr Z = 1}."""
    w, V = np.linalg.eigh((Z + Z.conj().T) / 2)
    u = np.sort(w)[::-1]
    css = np.cumsum(u) - 1
    k = np.nonzero(u - css / np.arange(1, len(u) + 1) > 0)[0][-1]
    w = np.maximum(w - css[k] / (k + 1), 0)
    return (V * w) @ V.conj().T


def _dual_bound(B: np.ndarray, c: np.ndarray, x: np.ndarray, iters: int = 2000) -> tuple[float, float]:
    """Lower bound on min{||C(x)|| : <c, x> = 1} from a near-optimal x.

    Every W = U_r Z V_r^* with Z >= 0, tr Z = 1 has unit nuclear norm, so
    Re<W, C(y)> <= ||C(y)|| for all y.  Z is chosen on the top singular
    cluster of C(x) to make this linear minorant parallel to c (the
    subdifferential condition at an optimum); the component left orthogonal
    to c is charged against ||x||.
    """
    U, s, Vh = np.linalg.svd(np.tensordot(x, B, axes=1))
    cc = c @ c
    P = np.eye(len(c)) - np.outer(c, c) / cc
    xnorm = float(np.linalg.norm(x))
    best_alpha, best_res = -np.inf, np.inf
    for rel in (1e-6, 1e-4, 1e-2):
        r = int(np.sum(s >= s[0] * (1 - rel)))
        Ur, Vr = U[:, :r], Vh[:r].conj().T
        K = np.einsum("ap,iab,bq->ipq", Ur.conj(), B, Vr)  # g_i(Z) = Re tr(Z^* K_i)
        PK = np.tensordot(P, K, axes=1)
        L = 2 * float(np.sum(np.abs(PK) ** 2)) + 1e-300
        Z = np.eye(r, dtype=complex) / r
        Y, t = Z, 1.0
        for _ in range(iters):
            resid = np.real(np.tensordot(PK, Y.conj(), axes=([1, 2], [0, 1])))
            grad = 2 * np.tensordot(resid, PK, axes=1)
            Znew = _project_spectraplex(Y - grad / L)
            tnew = (1 + np.sqrt(1 + 4 * t * t)) / 2
            Y = Znew + (t - 1) / tnew * (Znew - Z)
            step = float(np.max(np.abs(Znew - Z)))
            Z, t = Znew, tnew
            if step < 1e-13:
                break
        g = np.real(np.tensordot(K, Z.conj(), axes=([1, 2], [0, 1])))
        res = float(np.linalg.norm(P @ g))
        alpha = float(g @ c / cc) - res * xnorm
        if alpha > best_alpha:
            best_alpha, best_res = alpha, res
        if r == len(s):
            break
    return best_alpha, best_res


def _gauge_min_subgradient(B: np.ndarray, c: np.ndarray, opts: SolverOptions):
    """Projected subgradient with 1/sqrt(k) steps, or Polyak steps when a target norm is known.

    The dual estimate averages the subgradients of the second half of the run;
    each has nuclear-norm-one weights, so the average still minorises the norm.
    """
    target = opts.polyak_target
    x = c / (c @ c)
    P = np.eye(len(c)) - np.outer(c, c) / (c @ c)
    best_x, best_N = x, np.inf
    step0 = np.linalg.norm(x)
    gsum, gcount = np.zeros(len(c)), 0
    for k in range(1, opts.max_iter + 1):
        U, s, Vh = np.linalg.svd(np.tensordot(x, B, axes=1))
        if s[0] < best_N:
            best_x, best_N = x, float(s[0])
        g = np.real(np.tensordot(B, np.outer(U[:, 0], Vh[0]).conj(), axes=([1, 2], [0, 1])))
        if k > opts.max_iter // 2:
            gsum += g
            gcount += 1
        pg = P @ g
        gn = float(pg @ pg)
        if gn == 0:
            gsum, gcount = g, 1
            break
        if target is not None:
            t = max(s[0] - target, 0.0) / gn
        else:
            t = step0 / np.sqrt(k) / np.sqrt(gn)
        x = x - t * pg
    gbar = gsum / max(gcount, 1)
    alpha = float(gbar @ c / (c @ c))
    return best_x, best_N, alpha, float(np.linalg.norm(P @ gbar)), k


def connes_distance(phi: StateSpec, psi: StateSpec, T: TruncationSpec, support_radius: float,
                    mode: str = "certified_lower", solver: SolverOptions | None = None,
                    support: list | None = None) -> DistanceResult:
    """sup |phi(f) - psi(f)| over self-adjoint f on ball(level, support_radius) with a Lipschitz bound.

    ``certified_lower`` bounds Lip by sum |f(g)| Lip(delta_g); the optimum is a
    single symmetric pair and is a guaranteed lower bound for the distance.
    ``compressed`` bounds the compressed commutator norm on T instead.
    An explicit symmetric ``support`` overrides the ball of ``support_radius``.
    """
    if phi.cocycle != psi.cocycle:
        raise ConfigError("states over different cocycles")
    if support_radius > T.radius:
        raise ConfigError("support radius exceeds truncation radius")
    cocycle = phi.cocycle
    if support is None:
        reps = pair_representatives(ball(T.p, T.d, T.level, support_radius))
    else:
        reps = pair_representatives(_ListTable(sorted(set(support), key=_element_key)))
    delta = np.array([phi(g) - psi(g) for g in reps], dtype=complex)
    if mode == "certified_lower":
        return _certified_lower(reps, delta, cocycle)
    if mode != "compressed":
        raise ConfigError(f"unknown mode {mode!r}")
    solver = solver or SolverOptions()
    if not np.any(np.abs(delta) > 0):
        return DistanceResult(0.0, "compressed", FourierPolynomial.zero(cocycle), degenerate=True)
    c = np.empty(2 * len(reps))
    c[0::2] = 2 * delta.real
    c[1::2] = -2 * delta.imag
    mats = _pair_basis(reps, cocycle, T)
    for i, M in enumerate(mats):
        if M.nnz == 0 and c[i] != 0:
            raise SolverError("a support pair has no commutator inside the truncation; distance unbounded")
    keep = [i for i, M in enumerate(mats) if M.nnz > 0]
    B = _stack_dense([mats[i] for i in keep])
    ck = c[keep]
    if solver.method == "smoothed":
        x, Nbest, alpha, stat, iters = _gauge_min_smoothed(B, ck, solver)
    elif solver.method == "subgradient":
        x, Nbest, alpha, stat, iters = _gauge_min_subgradient(B, ck, solver)
    else:
        raise ConfigError(f"unknown solver method {solver.method!r}")
    value = 1.0 / Nbest
    dual = 1.0 / alpha if alpha > 0 else float("inf")
    gap = abs(dual - value)
    full = np.zeros(len(c))
    full[keep] = x / Nbest
    coeffs = {}
    for j, g in enumerate(reps):
        a = complex(full[2 * j], full[2 * j + 1])
        if a != 0:
            coeffs[g] = a
            coeffs[-g] = np.conj(a)
    cert = FourierPolynomial(cocycle, coeffs)
    residual = {"duality_gap": gap, "stationarity": stat, "dual_estimate": dual, "iterations": int(iters)}
    if gap > solver.gap_tol * max(1.0, value):
        raise SolverError(f"compressed distance did not converge (gap {gap:.3e})", residual)
    return DistanceResult(float(value), "compressed", cert, residual=residual)


# ---------------------------------------------------------------- convergence

@dataclass
class BridgeReport:
    n: int
    m: int
    N: int
    samples: int
    seed: int
    support_radius: float
    radius: float
    eps_max: float
    eps_mean: float
    eps: list

    def to_json(self) -> dict:
        return {
            "schema": SCHEMA_VERSION,
            "n": self.n, "m": self.m, "N": self.N, "samples": self.samples, "seed": self.seed,
            "support_radius": self.support_radius, "radius": self.radius,
            "eps_max": self.eps_max, "eps_mean": self.eps_mean,
            # the reverse condition holds with a = b and Lip_inf(b) = Lip_n(b)
            "bb2_exact": True,
        }


def random_normalized_samples(cocycle: CocycleSpec, T: TruncationSpec, support_radius: float,
                              samples: int, seed: int) -> list[FourierPolynomial]:
    """Seeded self-adjoint polynomials on ball(T.level, support_radius) with lip(f, T) = 1."""
    rng = np.random.default_rng(seed)
    support = ball(T.p, T.d, T.level, support_radius).elements
    out = []
    while len(out) < samples:
        f = random_self_adjoint(cocycle, support, rng)
        L = lip(f, T)
        if L > 0:
            out.append(f * (1.0 / L))
    return out


def bridge_builder_epsilon(n: int, spec: FejerSpec, T: TruncationSpec, samples: int, seed: int,
                           support_radius: float = 2.0, cocycle: CocycleSpec | None = None) -> BridgeReport:
    """Empirical epsilon for the forward bridge-builder condition: max/mean of ||f - E_N f|| over samples."""
    if samples < 1:
        raise ConfigError("samples must be >= 1")
    if spec.n != n:
        spec = FejerSpec(n, spec.N)
    cocycle = cocycle or CocycleSpec.trivial(T.p, T.d)
    fs = random_normalized_samples(cocycle, T, support_radius, samples, seed)
    eps = [spectral_norm(lambda_matrix(f - fejer_smooth(f, spec), T, sparse=True)) for f in fs]
    return BridgeReport(n, T.level, spec.N, samples, seed, float(support_radius), float(T.radius),
                        float(np.max(eps)), float(np.mean(eps)), eps)


def hausdorff(a: np.ndarray, b: np.ndarray) -> float:
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.size == 0 or b.size == 0:
        raise ConfigError("Hausdorff distance of an empty set")
    D = np.abs(a[:, None] - b[None, :])
    return float(max(D.min(axis=1).max(), D.min(axis=0).max()))


def spectral_compare(T1: TruncationSpec, T2: TruncationSpec, window: float) -> float:
    """Hausdorff distance between the two Dirac spectra restricted to [-window, window]."""
    if window > min(T1.radius, T2.radius):
        raise ConfigError("window exceeds a truncation radius; spectrum there is incomplete")
    s1 = np.unique(np.round(dirac_spectrum(T1), 12))
    s2 = np.unique(np.round(dirac_spectrum(T2), 12))
    s1 = s1[np.abs(s1) <= window + 1e-12]
    s2 = s2[np.abs(s2) <= window + 1e-12]
    if s1.size == 0 or s2.size == 0:
        raise ConfigError("spectral window is empty")
    return hausdorff(s1, s2)
