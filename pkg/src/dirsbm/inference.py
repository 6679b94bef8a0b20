"""Hybrid-likelihood classification EM for the Dirichlet SBM.

Labels are 0-based throughout the library (``0 .. K-1``); files written by
the CLI use 1-based labels.

Every node's Dirichlet parameter vector is ``A[k, c_j]`` over the receivers
``j != i``. Grouping receivers by cluster gives the sufficient statistics used
everywhere below:

* ``S[i, g] = sum_{j != i, c_j = g} log x_ij``
* ``m_i = counts - e_{c_i}`` (cluster sizes seen from node ``i``)

so the log-density of row ``i`` under sender cluster ``k`` is
``lgamma(m_i @ A[k]) - m_i @ lgamma(A[k]) + S[i] @ (A[k] - 1)``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linear_sum_assignment, minimize
from scipy.special import digamma, gammaln, logsumexp

from . import kernels
from .network import CompositionMatrix

log = logging.getLogger(__name__)

ALPHA_LOWER = 1e-6
ALPHA_UPPER = 50.0
DEFAULT_TOL = 1e-5
DEFAULT_MAX_ITERS = 100
MAX_RESCUES = 3


class FitError(RuntimeError):
    pass


class EmptyClusterError(FitError):
    pass


@dataclass(frozen=True, eq=False)
class DirichletBlockParams:
    A: np.ndarray
    theta: np.ndarray

    def __post_init__(self):
        A = np.array(self.A, dtype=float)
        theta = np.array(self.theta, dtype=float)
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise ValueError(f"A must be square, got {A.shape}")
        if theta.shape != (A.shape[0],):
            raise ValueError("theta length must equal the number of clusters")
        if not np.all(A > 0):
            raise ValueError("concentrations must be strictly positive")
        if np.any(theta < 0) or abs(theta.sum() - 1.0) > 1e-10:
            raise ValueError("theta must lie on the simplex")
        A.setflags(write=False)
        theta.setflags(write=False)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "theta", theta)

    @property
    def K(self) -> int:
        return self.A.shape[0]

    @property
    def log_theta(self) -> np.ndarray:
        with np.errstate(divide="ignore"):
            return np.log(self.theta)

    def rows_permuted(self, perm) -> "DirichletBlockParams":
        """Reorder mixture components (rows of A, entries of theta); receiver columns stay."""
        perm = np.asarray(perm)
        return DirichletBlockParams(self.A[perm], self.theta[perm])

    def relabeled(self, perm) -> "DirichletBlockParams":
        """Rename clusters: new cluster ``k`` is old cluster ``perm[k]`` in rows and columns."""
        perm = np.asarray(perm)
        return DirichletBlockParams(self.A[np.ix_(perm, perm)], self.theta[perm])


@dataclass(eq=False)
class ClusterState:
    labels: np.ndarray
    resp: np.ndarray

    @property
    def K(self) -> int:
        return self.resp.shape[1]

    @property
    def Z(self) -> np.ndarray:
        return one_hot(self.labels, self.K)


@dataclass(eq=False)
class FitResult:
    params: DirichletBlockParams
    state: ClusterState
    hybrid_loglik: float
    loglik_trace: list[float]
    n_iters: int
    converged: bool
    seed: int
    complete_loglik: float
    n_rescues: int = 0
    alignment_degenerate: bool = False
    start_logliks: list[float] = field(default_factory=list)

    @property
    def K(self) -> int:
        return self.params.K

    @property
    def labels(self) -> np.ndarray:
        return self.state.labels

    @property
    def n(self) -> int:
        return self.state.labels.size

    @property
    def cluster_sizes(self) -> np.ndarray:
        return np.bincount(self.labels, minlength=self.K)


# ---------------------------------------------------------------------------
# building blocks
# ---------------------------------------------------------------------------


def one_hot(labels, K: int) -> np.ndarray:
    labels = np.asarray(labels)
    Z = np.zeros((labels.size, K))
    Z[np.arange(labels.size), labels] = 1.0
    return Z


def _check_labels(labels, n: int, K: int) -> np.ndarray:
    labels = np.asarray(labels)
    if labels.shape != (n,):
        raise ValueError(f"expected {n} labels, got shape {labels.shape}")
    if not np.issubdtype(labels.dtype, np.integer):
        if not np.all(np.equal(np.mod(labels, 1), 0)):
            raise ValueError("labels must be integers")
    labels = labels.astype(np.int64)
    if labels.min() < 0 or labels.max() >= K:
        raise ValueError(f"labels must lie in 0..{K - 1}")
    return labels


def sufficient_stats(logx: np.ndarray, labels: np.ndarray, K: int) -> tuple[np.ndarray, np.ndarray]:
    """Per-node receiver-cluster log sums ``S`` (n, K) and cluster counts ``N`` (K,)."""
    Z = one_hot(labels, K)
    return logx @ Z, Z.sum(axis=0)


def sender_log_densities(comp: CompositionMatrix, A: np.ndarray, labels) -> np.ndarray:
    """``D[i, k] = log Dir(x_i* ; A[k, c_j] for j != i)`` for all nodes and sender clusters."""
    A = np.asarray(A, dtype=float)
    K = A.shape[0]
    labels = _check_labels(labels, comp.n, K)
    S, N = sufficient_stats(comp.log_comp, labels, K)
    lgA = gammaln(A)
    tot = A @ N  # (k,)
    slg = lgA @ N
    # G[k, c]: normaliser for a node of cluster c (its own label removed from the counts)
    G = gammaln(tot[:, None] - A) - slg[:, None] + lgA
    return G[:, labels].T + S @ (A - 1.0).T


def row_alpha_vector(i: int, k: int, labels, A: np.ndarray) -> np.ndarray:
    """Dirichlet parameters for row ``i`` if node ``i`` sat in cluster ``k``; receivers in index order."""
    labels = np.asarray(labels)
    if np.any(labels < 0):
        raise ValueError("all receiver labels must be assigned")
    others = np.delete(labels, i)
    return np.asarray(A, dtype=float)[k, others]


def _node_terms(comp, params: DirichletBlockParams, labels) -> np.ndarray:
    D = sender_log_densities(comp, params.A, labels)
    with np.errstate(divide="ignore"):
        terms = logsumexp(D + params.log_theta[None, :], axis=1)
    if not np.all(np.isfinite(terms)):
        raise FitError("non-finite hybrid log-likelihood")
    return terms


def hybrid_loglik(comp: CompositionMatrix, params: DirichletBlockParams, labels) -> float:
    """Observed hybrid log-likelihood: sum_i log sum_k theta_k p(x_i | c_i = k, fixed c_-i)."""
    return float(_node_terms(comp, params, labels).sum())


def complete_hybrid_loglik(comp: CompositionMatrix, params: DirichletBlockParams, labels, resp) -> float:
    """Complete-data hybrid log-likelihood at the hard partition ``argmax(resp)``."""
    D = sender_log_densities(comp, params.A, labels)
    hard = np.argmax(resp, axis=1)
    rows = np.arange(comp.n)
    with np.errstate(divide="ignore"):
        value = float((D[rows, hard] + params.log_theta[hard]).sum())
    return value


def e_step(comp: CompositionMatrix, params: DirichletBlockParams, labels) -> np.ndarray:
    D = sender_log_densities(comp, params.A, labels)
    with np.errstate(divide="ignore"):
        logp = D + params.log_theta[None, :]
        norm = logsumexp(logp, axis=1, keepdims=True)
    if not np.all(np.isfinite(norm)):
        raise FitError("E-step underflow in every cluster; parameters are degenerate")
    resp = np.exp(logp - norm)
    return resp / resp.sum(axis=1, keepdims=True)


def c_step(comp: CompositionMatrix, params: DirichletBlockParams, labels) -> np.ndarray:
    """One greedy sequential sweep: each node takes the label maximising the observed hybrid log-likelihood."""
    labels = _check_labels(labels, comp.n, params.K)
    new, _ = kernels.dirsbm_sweep(comp.log_comp, labels, params.A, params.log_theta)
    return new


def m_step_theta(resp) -> np.ndarray:
    resp = np.asarray(resp, dtype=float)
    theta = resp.sum(axis=0) / resp.shape[0]
    return theta / theta.sum()


@dataclass(frozen=True, eq=False)
class AlphaObjective:
    """Expected complete-data hybrid log-likelihood as a function of A.

    Reduced to K x K statistics: ``R[k, c]`` is the responsibility mass of
    cluster-``c`` nodes on component ``k``, ``SS[k, g]`` the responsibility-
    weighted log sums over receivers in cluster ``g`` and ``M[c, g]`` the
    receiver counts seen by a node of cluster ``c``.
    """

    R: np.ndarray
    SS: np.ndarray
    M: np.ndarray

    def value(self, A: np.ndarray) -> float:
        A = np.asarray(A, dtype=float)
        tot = A @ self.M.T
        return float(np.sum(self.R * (gammaln(tot) - gammaln(A) @ self.M.T)) + np.sum((A - 1.0) * self.SS))

    def gradient(self, A: np.ndarray) -> np.ndarray:
        A = np.asarray(A, dtype=float)
        tot = A @ self.M.T
        return (self.R * digamma(tot)) @ self.M - digamma(A) * (self.R @ self.M) + self.SS


def alpha_objective(comp: CompositionMatrix, resp, labels) -> AlphaObjective:
    resp = np.asarray(resp, dtype=float)
    K = resp.shape[1]
    labels = _check_labels(labels, comp.n, K)
    S, N = sufficient_stats(comp.log_comp, labels, K)
    Z = one_hot(labels, K)
    R = resp.T @ Z
    SS = resp.T @ S
    M = N[None, :] - np.eye(K)
    used = N > 0
    return AlphaObjective(R[:, used], SS, M[used])


def m_step_alpha(
    comp: CompositionMatrix,
    resp,
    labels,
    A_init,
    bounds: tuple[float, float] = (ALPHA_LOWER, ALPHA_UPPER),
) -> np.ndarray:
    """Maximise the expected complete-data hybrid log-likelihood over A with L-BFGS-B."""
    obj = alpha_objective(comp, resp, labels)
    K = obj.SS.shape[0]
    lo, hi = bounds
    A0 = np.clip(np.asarray(A_init, dtype=float), lo, hi)
    if A0.shape != (K, K):
        raise ValueError(f"A_init must be {K}x{K}")
    scale = 1.0 / comp.n

    def fun(a):
        A = a.reshape(K, K)
        return -scale * obj.value(A), -scale * obj.gradient(A).ravel()

    f0 = obj.value(A0)
    starts = [A0, np.ones((K, K))]
    for attempt, start in enumerate(starts):
        res = minimize(
            fun,
            start.ravel(),
            jac=True,
            method="L-BFGS-B",
            bounds=[(lo, hi)] * (K * K),
            options={"maxiter": 2000, "ftol": 1e-13, "gtol": 1e-9},
        )
        A = np.clip(res.x.reshape(K, K), lo, hi)
        f = obj.value(A)
        if np.isfinite(f):
            if f >= f0:
                return A
            if attempt == len(starts) - 1 and np.isfinite(f0):
                return A0
        log.debug("L-BFGS-B attempt %d did not improve: %s", attempt, res.message)
    if np.isfinite(f0):
        return A0
    raise FitError("Dirichlet parameter update failed")


def align_cluster_order(resp, labels) -> np.ndarray:
    """Match mixture components to partition labels.

    Returns ``perm`` with ``perm[c]`` the component (column of ``resp``, row of
    A) matched to label ``c``, maximising agreement between ``argmax(resp)``
    and ``labels``.
    """
    resp = np.asarray(resp)
    K = resp.shape[1]
    hard = np.argmax(resp, axis=1)
    conf = np.zeros((K, K))
    np.add.at(conf, (np.asarray(labels), hard), 1.0)
    rows, cols = linear_sum_assignment(conf, maximize=True)
    perm = np.empty(K, dtype=np.int64)
    perm[rows] = cols
    return perm


def random_partition(n: int, K: int, rng: np.random.Generator) -> np.ndarray:
    """Uniform labels, redrawn until every cluster is used."""
    if K > n:
        raise ValueError(f"cannot split {n} nodes into {K} nonempty clusters")
    while True:
        labels = rng.integers(0, K, size=n)
        if np.unique(labels).size == K:
            return labels


# ---------------------------------------------------------------------------
# driver
# ---------------------------------------------------------------------------


def _run_cem(comp, K, labels, max_iters, tol):
    resp = one_hot(labels, K)
    theta = m_step_theta(resp)
    A = m_step_alpha(comp, resp, labels, np.ones((K, K)))
    params = DirichletBlockParams(A, theta)
    ll = hybrid_loglik(comp, params, labels)
    trace = [ll]
    converged = False
    it = 0
    for it in range(1, max_iters + 1):
        resp = e_step(comp, params, labels)
        labels = c_step(comp, params, labels)
        if np.bincount(labels, minlength=K).min() == 0:
            raise EmptyClusterError(f"cluster emptied at iteration {it}")
        theta = m_step_theta(resp)
        A = m_step_alpha(comp, resp, labels, params.A)
        params = DirichletBlockParams(A, theta)
        ll_new = hybrid_loglik(comp, params, labels)
        trace.append(ll_new)
        if abs((ll_new - ll) / ll_new) < tol:
            converged = True
            break
        ll = ll_new
    return params, labels, trace, it, converged


def fit(
    comp: CompositionMatrix,
    K: int,
    init_labels,
    max_iters: int = DEFAULT_MAX_ITERS,
    tol: float = DEFAULT_TOL,
    seed: int = 0,
    max_rescues: int = MAX_RESCUES,
) -> FitResult:
    """Fit the DirSBM with K clusters from a starting hard partition.

    Iterates E-step, C-step, M-step until the relative change of the
    observed hybrid log-likelihood drops below ``tol``. If a cluster
    empties, the run restarts from a random partition drawn from
    ``seed`` (at most ``max_rescues`` times).
    """
    if K < 1:
        raise ValueError("K must be at least 1")
    if not tol > 0:
        raise ValueError("tol must be positive")
    labels = _check_labels(init_labels, comp.n, K)
    if np.bincount(labels, minlength=K).min() == 0:
        raise ValueError("initial labels must use all K clusters")

    rescue_rng = np.random.default_rng([seed, 0x5E5C])
    n_rescues = 0
    while True:
        try:
            params, labels, trace, n_iters, converged = _run_cem(comp, K, labels, max_iters, tol)
            break
        except EmptyClusterError as exc:
            if n_rescues >= max_rescues:
                raise FitError(f"empty cluster after {n_rescues} rescues") from exc
            n_rescues += 1
            log.debug("restarting from a random partition (%s)", exc)
            labels = random_partition(comp.n, K, rescue_rng)

    resp = e_step(comp, params, labels)
    perm = align_cluster_order(resp, labels)
    degenerate = bool(
        np.bincount(labels, minlength=K).min() == 0
        or np.bincount(np.argmax(resp, axis=1), minlength=K).min() == 0
    )
    params = params.rows_permuted(perm)
    resp = resp[:, perm]

    return FitResult(
        params=params,
        state=ClusterState(labels=labels, resp=resp),
        hybrid_loglik=trace[-1],
        loglik_trace=trace,
        n_iters=n_iters,
        converged=converged,
        seed=seed,
        complete_loglik=complete_hybrid_loglik(comp, params, labels, resp),
        n_rescues=n_rescues,
        alignment_degenerate=degenerate,
    )
