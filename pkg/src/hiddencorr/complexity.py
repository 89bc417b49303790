"""Free-parameter counts for the three decomposition families."""

from __future__ import annotations

from typing import Sequence, Tuple, Union

KINDS = ("parafac", "tucker", "sdt")

Ranks = Union[int, Sequence[int]]


def check_kind(kind: str) -> str:
    k = str(kind).lower()
    if k not in KINDS:
        raise ValueError(f"unknown model kind {kind!r}; expected one of {KINDS}")
    return k


def normalize_ranks(kind: str, ranks: Ranks) -> Tuple[int, ...]:
    """Canonical rank tuple: ``(R,)`` for PARAFAC, ``(P, Q, R)`` otherwise.

    SDT ranks may be given as ``(P, R)`` or ``(P, Q, R)`` with ``P == Q``.
    """
    kind = check_kind(kind)
    if isinstance(ranks, (int,)) or getattr(ranks, "ndim", None) == 0:
        ranks = (int(ranks),)
    r = tuple(int(x) for x in ranks)
    if any(x < 1 for x in r):
        raise ValueError(f"ranks must be positive, got {r}")
    if kind == "parafac":
        if len(r) == 3 and r[0] == r[1] == r[2]:
            r = r[:1]
        if len(r) != 1:
            raise ValueError(f"PARAFAC takes a single rank, got {r}")
        return r
    if kind == "sdt":
        if len(r) == 2:
            r = (r[0], r[0], r[1])
        if len(r) != 3 or r[0] != r[1]:
            raise ValueError(f"SDT ranks must be (P, R) or (P, P, R), got {r}")
        return r
    if len(r) != 3:
        raise ValueError(f"Tucker ranks must be (P, Q, R), got {r}")
    return r


def count_free_params(kind: str, dims: Sequence[int], ranks: Ranks) -> int:
    """Number of estimated elements of a model of ``kind`` fitted to ``dims``.

    >>> count_free_params("sdt", (65, 65, 150), (8, 8, 1))
    1198
    >>> count_free_params("tucker", (65, 65, 150), (8, 8, 1))
    1254
    >>> count_free_params("parafac", (65, 65, 150), 4)
    1120
    """
    kind = check_kind(kind)
    i, j, k = (int(d) for d in dims)
    r = normalize_ranks(kind, ranks)
    if kind == "parafac":
        return r[0] * (i + j + k)
    p, q, rr = r
    base = p * i + q * j + rr * k
    if kind == "tucker":
        return base + p * q * rr
    return base + p * rr
