"""Implicit Runge-Kutta tableaux and algebraic-stability certification."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

S3 = np.sqrt(3.0)


@dataclass(frozen=True, eq=False)
class ButcherTableau:
    A: np.ndarray
    b: np.ndarray
    c: np.ndarray
    name: str = "custom"

    def __post_init__(self):
        A = np.atleast_2d(np.asarray(self.A, dtype=float))
        b = np.atleast_1d(np.asarray(self.b, dtype=float))
        c = np.atleast_1d(np.asarray(self.c, dtype=float))
        s = len(b)
        if A.shape != (s, s) or c.shape != (s,):
            raise ValueError(f"inconsistent tableau shapes A{A.shape}, b{b.shape}, c{c.shape}")
        for arr in (A, b, c):
            arr.setflags(write=False)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "c", c)

    @property
    def s(self) -> int:
        return len(self.b)

    @property
    def is_lower_triangular(self) -> bool:
        return not np.triu(self.A, 1).any()

    def consistency_defect(self) -> float:
        """max(|c - A 1|, |sum b - 1|)."""
        return float(max(np.abs(self.c - self.A.sum(axis=1)).max(), abs(self.b.sum() - 1.0)))

    def to_text(self) -> str:
        """Butcher array, one stage per row, ``c | A`` above a ``| b`` row."""
        fmt = "{:.17g}".format
        lines = [f"{fmt(ci)} | " + " ".join(fmt(x) for x in row) for ci, row in zip(self.c, self.A)]
        lines.append("---")
        lines.append("| " + " ".join(fmt(x) for x in self.b))
        return "\n".join(lines) + "\n"

    def __eq__(self, other):
        if not isinstance(other, ButcherTableau):
            return NotImplemented
        return (np.array_equal(self.A, other.A) and np.array_equal(self.b, other.b)
                and np.array_equal(self.c, other.c))

    def __hash__(self):
        return hash((self.A.tobytes(), self.b.tobytes(), self.c.tobytes()))


_BUILTIN = {
    "qz2": ([[0.25, 0.0], [0.5, 0.25]], [0.5, 0.5], [0.25, 0.75]),
    "crouzeix3": ([[0.5 + S3 / 6, 0.0], [-S3 / 3, 0.5 + S3 / 6]], [0.5, 0.5],
                  [0.5 + S3 / 6, 0.5 - S3 / 6]),
    "gl4": ([[0.25, 0.25 - S3 / 6], [0.25 + S3 / 6, 0.25]], [0.5, 0.5],
            [0.5 - S3 / 6, 0.5 + S3 / 6]),
    "backward-euler": ([[1.0]], [1.0], [1.0]),
    "implicit-midpoint": ([[0.5]], [1.0], [0.5]),
    "forward-euler": ([[0.0]], [1.0], [0.0]),
}

#: tableaux certified algebraically stable and shipped for time stepping
BUILTIN_NAMES = ("qz2", "crouzeix3", "gl4", "backward-euler", "implicit-midpoint")


def builtin(name: str) -> ButcherTableau:
    """Return a named tableau.

    ``qz2`` is Qin and Zhang's 2-stage order-2 DIRK, ``crouzeix3`` Crouzeix's
    2-stage order-3 DIRK and ``gl4`` the 2-stage order-4 Gauss-Legendre
    method.  ``forward-euler`` is provided only as an uncertifiable
    counterexample.
    """
    try:
        A, b, c = _BUILTIN[name]
    except KeyError:
        raise ValueError(f"unknown tableau {name!r}; known: {sorted(_BUILTIN)}") from None
    return ButcherTableau(np.array(A), np.array(b), np.array(c), name)


def stability_matrix(t: ButcherTableau) -> np.ndarray:
    """``M_ij = b_i a_ij + b_j a_ji - b_i b_j``."""
    BA = t.b[:, None] * t.A
    return BA + BA.T - np.outer(t.b, t.b)


@dataclass(frozen=True)
class StabilityReport:
    stable: bool
    reason: str
    M: np.ndarray
    eigenvalues: np.ndarray

    def __bool__(self):
        return self.stable


def certify_algebraically_stable(t: ButcherTableau, b_tol: float = 1e-14,
                                 eig_tol: float = 1e-12) -> StabilityReport:
    M = stability_matrix(t)
    eig = np.linalg.eigvalsh(M)
    reasons = []
    if (t.b < -b_tol).any():
        reasons.append(f"negative weight b = {t.b.min():.3g}")
    if eig.min() < -eig_tol:
        reasons.append(f"M not positive semi-definite (min eigenvalue {eig.min():.6g})")
    return StabilityReport(not reasons, "; ".join(reasons) or "b >= 0 and M PSD", M, eig)


class TableauParseError(ValueError):
    def __init__(self, line: int, msg: str):
        super().__init__(f"line {line}: {msg}")
        self.line = line


def _number(tok: str, lineno: int) -> float:
    try:
        return float(Fraction(tok)) if "/" in tok else float(tok)
    except (ValueError, ZeroDivisionError):
        raise TableauParseError(lineno, f"cannot parse number {tok!r}") from None


def parse_tableau(text: str, name: str = "custom") -> ButcherTableau:
    """Parse the text form written by :meth:`ButcherTableau.to_text`.

    Stage rows are ``c_i | a_i1 ... a_is``; a line of dashes separates them
    from the ``| b_1 ... b_s`` row.  Numbers may be decimals or fractions
    ``p/q``; ``#`` starts a comment.
    """
    rows, b = [], None
    seen_sep = False
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if set(line) <= set("-+ "):
            if seen_sep:
                raise TableauParseError(lineno, "duplicate separator line")
            seen_sep = True
            continue
        if "|" not in line:
            raise TableauParseError(lineno, "expected '|' between c and A (or before b)")
        left, right = (p.strip() for p in line.split("|", 1))
        nums = [_number(tok, lineno) for tok in right.split()]
        if seen_sep:
            if left or b is not None:
                raise TableauParseError(lineno, "the b row must look like '| b_1 ... b_s'")
            b = (lineno, nums)
        else:
            if not left:
                raise TableauParseError(lineno, "missing abscissa c_i before '|'")
            rows.append((lineno, _number(left, lineno), nums))
    if not rows:
        raise TableauParseError(1, "no stage rows found")
    if b is None:
        raise TableauParseError(rows[-1][0], "missing separator and b row")
    s = len(rows)
    for lineno, _, nums in rows:
        if len(nums) != s:
            raise TableauParseError(lineno, f"expected {s} entries in A row, got {len(nums)}")
    if len(b[1]) != s:
        raise TableauParseError(b[0], f"expected {s} weights, got {len(b[1])}")
    return ButcherTableau(np.array([r[2] for r in rows]), np.array(b[1]),
                          np.array([r[1] for r in rows]), name)
