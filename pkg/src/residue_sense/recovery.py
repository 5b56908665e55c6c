"""Sparse-recovery experiments: seeded K-sparse signals, OMP and IHT, success tables."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

from .matrix import TIE_TOL, SensingMatrix

AMPLITUDE_MODELS = ("unit", "gaussian", "rademacher")
ALGORITHMS = ("omp", "iht")
MAX_CONDITION = 1e12


class RecoveryError(RuntimeError):
    pass


@dataclass(frozen=True, eq=False)
class SparseSignal:
    N: int
    support: tuple[int, ...]
    values: np.ndarray

    @property
    def K(self) -> int:
        return len(self.support)

    @property
    def degenerate(self) -> bool:
        return self.K == 0

    def dense(self) -> np.ndarray:
        x = np.zeros(self.N, dtype=np.complex128)
        x[list(self.support)] = self.values
        return x

    @classmethod
    def from_dense(cls, x: np.ndarray) -> "SparseSignal":
        x = np.asarray(x, dtype=np.complex128)
        support = tuple(int(i) for i in np.flatnonzero(x))
        return cls(N=len(x), support=support, values=x[list(support)].copy())


def sample_sparse_signal(N: int, K: int, seed: int = 0, amplitude_model: str = "unit") -> SparseSignal:
    """Uniformly random support of size ``K`` with amplitudes from ``amplitude_model``.

    ``unit`` draws uniform random phases, ``gaussian`` draws standard complex
    normals and ``rademacher`` draws +-1.
    """
    N, K = int(N), int(K)
    if K < 0 or K > N:
        raise ValueError(f"need 0 <= K <= N, got K={K}, N={N}")
    rng = np.random.default_rng(int(seed))
    support = np.sort(rng.choice(N, size=K, replace=False)) if K else np.empty(0, dtype=np.int64)
    if amplitude_model == "unit":
        values = np.exp(2j * np.pi * rng.random(K))
    elif amplitude_model == "gaussian":
        values = (rng.standard_normal(K) + 1j * rng.standard_normal(K)) / math.sqrt(2)
    elif amplitude_model == "rademacher":
        values = rng.choice(np.array([-1.0, 1.0]), size=K).astype(np.complex128)
    else:
        raise ValueError(f"unknown amplitude model {amplitude_model!r}; choose from {AMPLITUDE_MODELS}")
    return SparseSignal(N=N, support=tuple(int(i) for i in support), values=values)


def measure(matrix: SensingMatrix, x: SparseSignal | np.ndarray) -> tuple[np.ndarray, float]:
    """Return ``y = Phi x`` and the ratio ``|y|^2 / |x|^2`` (nan for ``x = 0``)."""
    dense = x.dense() if isinstance(x, SparseSignal) else np.asarray(x, dtype=np.complex128)
    if dense.shape != (matrix.N,):
        raise ValueError(f"signal length {dense.shape} does not match N={matrix.N}")
    y = matrix.entries @ dense
    xx = float(np.vdot(dense, dense).real)
    ratio = float(np.vdot(y, y).real) / xx if xx > 0 else math.nan
    return y, ratio


@dataclass(frozen=True, eq=False)
class RecoveryResult:
    signal: SparseSignal
    iterations: int
    residual_norms: tuple[float, ...]


def _first_max(mags: np.ndarray) -> int:
    top = mags.max()
    return int(np.flatnonzero(mags >= top - TIE_TOL * max(1.0, top))[0])


def omp_recover(matrix: SensingMatrix, y: np.ndarray, K: int, tolerance: float = 1e-10) -> RecoveryResult:
    """Orthogonal matching pursuit with a least-squares refit on each round's support.

    Stops after ``K`` selections or once the residual norm drops below
    ``tolerance``. ``residual_norms[0]`` is ``|y|``.
    """
    K = int(K)
    if K < 1:
        raise ValueError("K must be >= 1")
    A = matrix.entries
    y = np.asarray(y, dtype=np.complex128)
    if y.shape != (matrix.M,):
        raise ValueError(f"measurement length {y.shape} does not match M={matrix.M}")
    N = matrix.N
    support: list[int] = []
    coef = np.zeros(0, dtype=np.complex128)
    residual = y.copy()
    norms = [float(np.linalg.norm(residual))]
    while len(support) < min(K, N) and norms[-1] >= tolerance:
        corr = np.abs(A.conj().T @ residual)
        corr[support] = -1.0
        support.append(_first_max(corr))
        sub = A[:, support]
        gram = sub.conj().T @ sub
        if np.linalg.cond(gram) > MAX_CONDITION:
            raise RecoveryError(f"Gram matrix on support {sorted(support)} is numerically singular")
        coef = np.linalg.solve(gram, sub.conj().T @ y)
        residual = y - sub @ coef
        norms.append(float(np.linalg.norm(residual)))
    x = np.zeros(N, dtype=np.complex128)
    x[support] = coef
    sig = SparseSignal(N=N, support=tuple(sorted(support)), values=x[sorted(support)])
    return RecoveryResult(signal=sig, iterations=len(support), residual_norms=tuple(norms))


def hard_threshold(x: np.ndarray, K: int) -> np.ndarray:
    """Keep the ``K`` largest-magnitude entries; ties go to the smaller index."""
    out = np.zeros_like(x)
    if K <= 0:
        return out
    keep = np.argsort(-np.abs(x), kind="stable")[:K]
    out[keep] = x[keep]
    return out


def iht_recover(
    matrix: SensingMatrix,
    y: np.ndarray,
    K: int,
    step: float = 1.0,
    max_iters: int = 200,
    tolerance: float = 1e-12,
) -> RecoveryResult:
    """Iterative hard thresholding: ``x <- H_K(x + step * Phi^H (y - Phi x))``.

    Stops when an iteration changes the residual norm by less than
    ``tolerance``, or after ``max_iters`` iterations.
    """
    K = int(K)
    if step <= 0:
        raise ValueError("step must be positive")
    if max_iters < 1:
        raise ValueError("max_iters must be >= 1")
    A = matrix.entries
    y = np.asarray(y, dtype=np.complex128)
    if y.shape != (matrix.M,):
        raise ValueError(f"measurement length {y.shape} does not match M={matrix.M}")
    ynorm = float(np.linalg.norm(y))
    x = np.zeros(matrix.N, dtype=np.complex128)
    norms = [ynorm]
    it = 0
    while it < max_iters:
        it += 1
        x = hard_threshold(x + step * (A.conj().T @ (y - A @ x)), K)
        if np.linalg.norm(x) > 1e6 * max(ynorm, np.finfo(float).tiny):
            raise RecoveryError(f"IHT diverged at iteration {it} (step={step})")
        norms.append(float(np.linalg.norm(y - A @ x)))
        if abs(norms[-2] - norms[-1]) < tolerance:
            break
    return RecoveryResult(signal=SparseSignal.from_dense(x), iterations=it, residual_norms=tuple(norms))


@dataclass(frozen=True, eq=False)
class RecoveryTrial:
    p: int
    k: int
    variant: str
    signal: SparseSignal
    y: np.ndarray
    algorithm: str
    params: dict
    recovered: SparseSignal
    support_exact: bool
    rel_error: float
    iterations: int
    seed: int


def relative_error(x_true: np.ndarray, x_hat: np.ndarray) -> float:
    denom = float(np.linalg.norm(x_true))
    diff = float(np.linalg.norm(x_hat - x_true))
    if denom == 0.0:
        return diff
    return diff / denom


def run_trial(
    matrix: SensingMatrix,
    K: int,
    seed: int,
    algorithm: str = "omp",
    amplitude_model: str = "unit",
    noise_snr_db: float | None = None,
    **alg_params,
) -> RecoveryTrial:
    """One seeded recovery trial. Noise, when requested, is complex Gaussian at the given SNR."""
    signal = sample_sparse_signal(matrix.N, K, seed, amplitude_model)
    y, _ = measure(matrix, signal)
    if noise_snr_db is not None and signal.K:
        rng = np.random.default_rng([int(seed), 1])
        power = float(np.vdot(y, y).real) / len(y)
        sigma = math.sqrt(power / 10 ** (noise_snr_db / 10) / 2)
        y = y + sigma * (rng.standard_normal(len(y)) + 1j * rng.standard_normal(len(y)))
    if K == 0:
        result = RecoveryResult(SparseSignal(matrix.N, (), np.zeros(0, np.complex128)), 0, (0.0,))
    elif algorithm == "omp":
        result = omp_recover(matrix, y, K, **alg_params)
    elif algorithm == "iht":
        result = iht_recover(matrix, y, K, **alg_params)
    else:
        raise ValueError(f"unknown algorithm {algorithm!r}; choose from {ALGORITHMS}")
    x_true, x_hat = signal.dense(), result.signal.dense()
    return RecoveryTrial(
        p=matrix.p,
        k=matrix.k,
        variant=matrix.variant.value,
        signal=signal,
        y=y,
        algorithm=algorithm,
        params={"amplitude_model": amplitude_model, "noise_snr_db": noise_snr_db, **alg_params},
        recovered=result.signal,
        support_exact=set(result.signal.support) == set(signal.support),
        rel_error=relative_error(x_true, x_hat),
        iterations=result.iterations,
        seed=int(seed),
    )


@dataclass(frozen=True)
class ExperimentRow:
    p: int
    k: int
    variant: str
    algorithm: str
    K: int
    trials: int
    success_rate: float
    median_rel_err: float
    seed: int


@dataclass(frozen=True)
class ExperimentTable:
    rows: tuple[ExperimentRow, ...]
    monotone: bool
    notes: tuple[str, ...] = field(default_factory=tuple)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for r in self.rows:
            w.writerow([r.p, r.k, r.variant, r.algorithm, r.K, r.trials, repr(r.success_rate), repr(r.median_rel_err), r.seed])
        return buf.getvalue()


CSV_HEADER = ("p", "k", "variant", "algorithm", "K", "trials", "success_rate", "median_rel_err", "seed")


def run_experiment(
    matrix: SensingMatrix,
    K_list,
    trials_per_K: int,
    algorithm: str = "omp",
    seed: int = 0,
    amplitude_model: str = "unit",
    noise_snr_db: float | None = None,
    **alg_params,
) -> ExperimentTable:
    """Exact-support success rate and median relative error for each ``K``.

    Trial number ``c`` (counted across all ``K`` in order) uses seed ``seed ^ c``.
    Non-monotone success rates are flagged in ``notes``, not raised.
    """
    if algorithm not in ALGORITHMS:
        raise ValueError(f"unknown algorithm {algorithm!r}; choose from {ALGORITHMS}")
    rows = []
    counter = 0
    for K in K_list:
        trials = [
            run_trial(matrix, int(K), int(seed) ^ (counter + t), algorithm, amplitude_model, noise_snr_db, **alg_params)
            for t in range(int(trials_per_K))
        ]
        counter += int(trials_per_K)
        rate = sum(tr.support_exact for tr in trials) / len(trials) if trials else math.nan
        med = float(np.median([tr.rel_error for tr in trials])) if trials else math.nan
        rows.append(
            ExperimentRow(
                p=matrix.p,
                k=matrix.k,
                variant=matrix.variant.value,
                algorithm=algorithm,
                K=int(K),
                trials=int(trials_per_K),
                success_rate=rate,
                median_rel_err=med,
                seed=int(seed),
            )
        )
    notes = []
    by_K = sorted(rows, key=lambda r: r.K)
    for lo, hi in zip(by_K, by_K[1:]):
        if hi.K > lo.K and hi.success_rate > lo.success_rate:
            notes.append(f"success rate rises from K={lo.K} ({lo.success_rate}) to K={hi.K} ({hi.success_rate})")
    return ExperimentTable(rows=tuple(rows), monotone=not notes, notes=tuple(notes))
