"""Power-residue sensing matrices, the Paley variant, and their coherence.

Columns are indexed from 0 and column ``i`` is labelled by the field element
``a = i``. Rows are labelled ``0`` (the constant row) followed by the nonzero
k-th powers in increasing order. The inner product conjugates its second
argument: ``<u, v> = sum_m u[m] * conj(v[m])``.
"""

from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .characters import additive_table
from .field import PrimeField, build_field, check_divisor, kth_power_residues

# Near-ties within this absolute gap are broken by smallest index.
TIE_TOL = 1e-12


class Variant(str, enum.Enum):
    POWER_RESIDUE = "powerresidue"
    PALEY = "paley"


@dataclass(frozen=True, eq=False)
class SensingMatrix:
    entries: np.ndarray
    p: int
    k: int
    variant: Variant
    column_labels: tuple[int | None, ...]
    row_labels: tuple[int, ...]

    @property
    def M(self) -> int:
        return self.entries.shape[0]

    @property
    def N(self) -> int:
        return self.entries.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.entries.shape

    def column(self, i: int) -> np.ndarray:
        return self.entries[:, self._index(i)]

    def _index(self, i: int) -> int:
        i = int(i)
        if not 0 <= i < self.N:
            raise IndexError(f"column index {i} out of range [0, {self.N})")
        return i

    def gram(self) -> np.ndarray:
        """``G[i, j] = <phi_i, phi_j>``."""
        return self.entries.T @ self.entries.conj()

    def metadata(self) -> dict:
        return {"p": self.p, "k": self.k, "variant": self.variant.value, "M": self.M, "N": self.N}


def _freeze(a: np.ndarray) -> np.ndarray:
    a.flags.writeable = False
    return a


def _power_residue_entries(field: PrimeField, k: int) -> tuple[np.ndarray, tuple[int, ...]]:
    p = field.p
    residues = np.array(kth_power_residues(field, k).elements, dtype=np.int64)
    psi = additive_table(field)
    a = np.arange(p, dtype=np.int64)
    entries = np.empty((1 + len(residues), p), dtype=np.complex128)
    entries[0, :] = 1.0 / math.sqrt(p)
    entries[1:, :] = math.sqrt(k / p) * psi[(residues[:, None] * a[None, :]) % p]
    return entries, (0, *(int(b) for b in residues))


def build_matrix(field: PrimeField, k: int) -> SensingMatrix:
    """The ``(p+k-1)/k x p`` matrix with rows ``1/sqrt(p)`` and ``sqrt(k/p) psi(b a)``.

    ``k = 1`` is accepted with a warning. That case is the unitary p x p DFT,
    and no RIP statement covers it.
    """
    p = field.p
    k = check_divisor(p, k)
    if k > p - 2:
        raise ValueError(f"k={k} must satisfy 1 <= k <= p-2 (p={p})")
    if k == 1:
        warnings.warn("k=1 gives the square DFT matrix; excluded from RIP analysis", stacklevel=2)
    entries, rows = _power_residue_entries(field, k)
    return SensingMatrix(
        entries=_freeze(entries),
        p=p,
        k=k,
        variant=Variant.POWER_RESIDUE,
        column_labels=tuple(range(p)),
        row_labels=rows,
    )


def paley_phase_exponent(p: int) -> int:
    return 0 if p % 4 == 1 else 1


def build_paley_matrix(field: PrimeField) -> SensingMatrix:
    """The quadratic-residue matrix with the extra column ``[i**r, 0, ..., 0]``.

    ``r = 0`` for ``p = 1 (mod 4)`` and ``r = 1`` for ``p = 3 (mod 4)``. The
    appended column has label ``None``.
    """
    p = field.p
    base, rows = _power_residue_entries(field, 2)
    extra = np.zeros((base.shape[0], 1), dtype=np.complex128)
    extra[0, 0] = 1j ** paley_phase_exponent(p)
    return SensingMatrix(
        entries=_freeze(np.hstack([base, extra])),
        p=p,
        k=2,
        variant=Variant.PALEY,
        column_labels=(*range(p), None),
        row_labels=rows,
    )


def inner_product(matrix: SensingMatrix, i: int, j: int) -> complex:
    """``<phi_i, phi_j>`` by direct M-term summation."""
    u = matrix.column(i)
    v = matrix.column(j)
    return complex(np.sum(u * v.conj()))


def column_norms(matrix: SensingMatrix) -> np.ndarray:
    return np.linalg.norm(matrix.entries, axis=0)


def argmax_with_ties(values: np.ndarray, tol: float = TIE_TOL) -> int:
    """First flat index whose value is within ``tol`` of the maximum."""
    values = np.asarray(values)
    top = values.max()
    return int(np.flatnonzero(values >= top - tol)[0])


def coherence(matrix: SensingMatrix) -> tuple[float, tuple[int, int]]:
    """Largest off-diagonal Gram magnitude and its lexicographically first witness ``(i, j)``, ``i < j``."""
    N = matrix.N
    if N < 2:
        raise ValueError("coherence needs at least two columns")
    mags = np.abs(matrix.gram())
    iu, ju = np.triu_indices(N, k=1)
    upper = mags[iu, ju]
    idx = argmax_with_ties(upper)
    return float(upper.max()), (int(iu[idx]), int(ju[idx]))


def welch_bound(M: int, N: int) -> float:
    """``sqrt((N-M) / (M(N-1)))``; 0 when ``N == 1``."""
    if M < 1 or N < 1:
        raise ValueError("welch_bound needs M, N >= 1")
    if M > N:
        raise ValueError(f"welch_bound needs M <= N, got M={M}, N={N}")
    if N == 1:
        return 0.0
    return math.sqrt((N - M) / (M * (N - 1)))


def compression_ratio(matrix: SensingMatrix) -> float:
    return matrix.N / matrix.M


# --- PHIPK v1 text format -------------------------------------------------

FORMAT_TAG = "PHIPK v1"
_READ_NORM_TOL = 1e-6


def format_matrix(matrix: SensingMatrix) -> str:
    lines = [
        f"{FORMAT_TAG} variant={matrix.variant.value} p={matrix.p} k={matrix.k} "
        f"M={matrix.M} N={matrix.N}"
    ]
    for row in matrix.entries:
        lines.append(" ".join(f"{z.real:.16e}:{z.imag:.16e}" for z in row))
    return "\n".join(lines) + "\n"


def write_matrix(matrix: SensingMatrix, path: str | Path) -> Path:
    path = Path(path)
    path.write_text(format_matrix(matrix), encoding="ascii")
    return path


class MatrixFormatError(ValueError):
    pass


def parse_matrix(text: str) -> SensingMatrix:
    lines = text.splitlines()
    if not lines or not lines[0].startswith(FORMAT_TAG + " "):
        raise MatrixFormatError(f"missing '{FORMAT_TAG}' header")
    try:
        fields = dict(tok.split("=", 1) for tok in lines[0][len(FORMAT_TAG) + 1 :].split())
        variant = Variant(fields["variant"])
        p, k, M, N = (int(fields[key]) for key in ("p", "k", "M", "N"))
    except (KeyError, ValueError) as exc:
        raise MatrixFormatError(f"bad header: {lines[0]!r}") from exc
    body = [ln for ln in lines[1:] if ln.strip()]
    if len(body) != M:
        raise MatrixFormatError(f"expected {M} rows, found {len(body)}")
    entries = np.empty((M, N), dtype=np.complex128)
    for r, line in enumerate(body):
        toks = line.split()
        if len(toks) != N:
            raise MatrixFormatError(f"row {r + 1}: expected {N} entries, found {len(toks)}")
        for c, tok in enumerate(toks):
            re_s, sep, im_s = tok.partition(":")
            if not sep:
                raise MatrixFormatError(f"row {r + 1}, entry {c + 1}: expected re:im, got {tok!r}")
            entries[r, c] = complex(float(re_s), float(im_s))
    norms = np.linalg.norm(entries, axis=0)
    bad = np.flatnonzero(np.abs(norms - 1.0) > _READ_NORM_TOL)
    if bad.size:
        raise MatrixFormatError(f"column {int(bad[0])} has norm {norms[bad[0]]:.12g}, expected 1")

    field = build_field(p)
    rows = (0, *kth_power_residues(field, k).elements)
    if len(rows) != M:
        raise MatrixFormatError(f"M={M} inconsistent with p={p}, k={k}")
    expected_N = p + 1 if variant is Variant.PALEY else p
    if N != expected_N:
        raise MatrixFormatError(f"N={N} inconsistent with variant {variant.value} and p={p}")
    labels = tuple(range(p)) + ((None,) if variant is Variant.PALEY else ())
    return SensingMatrix(
        entries=_freeze(entries), p=p, k=k, variant=variant, column_labels=labels, row_labels=rows
    )


def read_matrix(path: str | Path) -> SensingMatrix:
    return parse_matrix(Path(path).read_text(encoding="ascii"))
