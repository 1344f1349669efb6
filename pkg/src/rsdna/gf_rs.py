"""GF(2^8) arithmetic and a systematic Reed-Solomon errors-and-erasures codec.

Codeword layout is systematic: ``k`` message symbols followed by ``n - k``
parity symbols.  Symbol ``p`` of a codeword is the coefficient of
``x^(n-1-p)``, so the code is the ordinary shortened RS(255, 255-n+k) code and
position ``p`` has locator ``X_p = alpha^(n-1-p)``.

Two decoders are provided.  :func:`rs_decode` works on one codeword with plain
Python lists; :func:`decode_rows` decodes a whole matrix of rows at once with
numpy table lookups and is what the storage pipeline uses.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

FIELD_POLY = 0x11D
FIELD_SIZE = 256
_ORDER = FIELD_SIZE - 1


def _build_tables(poly: int) -> tuple[list[int], list[int]]:
    exp = [0] * (2 * _ORDER)
    log = [0] * FIELD_SIZE
    x = 1
    for i in range(_ORDER):
        exp[i] = x
        log[x] = i
        x <<= 1
        if x & 0x100:
            x ^= poly
    if len(set(exp[:_ORDER])) != _ORDER:
        raise ValueError(f"0x{poly:X} is not primitive over GF(2)")
    for i in range(_ORDER, 2 * _ORDER):
        exp[i] = exp[i - _ORDER]
    return exp, log


EXP, LOG = _build_tables(FIELD_POLY)

# full multiplication / inverse tables for vectorised work
_a = np.arange(FIELD_SIZE)
_log = np.array(LOG)
_exp = np.array(EXP)
MUL = np.where(
    (_a[:, None] > 0) & (_a[None, :] > 0),
    _exp[(_log[:, None] + _log[None, :]) % _ORDER],
    0,
).astype(np.uint8)
INV = np.zeros(FIELD_SIZE, dtype=np.uint8)
INV[1:] = _exp[(_ORDER - _log[1:]) % _ORDER]
del _a, _log, _exp


def gf_add(a: int, b: int) -> int:
    return a ^ b


def gf_mul(a: int, b: int) -> int:
    if a == 0 or b == 0:
        return 0
    return EXP[LOG[a] + LOG[b]]


def gf_inv(a: int) -> int:
    if a == 0:
        raise ValueError("zero has no multiplicative inverse in GF(256)")
    return EXP[_ORDER - LOG[a]]


def gf_div(a: int, b: int) -> int:
    return gf_mul(a, gf_inv(b))


def gf_pow(a: int, e: int) -> int:
    if a == 0:
        return 1 if e == 0 else 0
    return EXP[(LOG[a] * e) % _ORDER]


# Polynomials are lists of coefficients, lowest degree first.

def poly_trim(p: Sequence[int]) -> list[int]:
    p = list(p)
    while len(p) > 1 and p[-1] == 0:
        p.pop()
    return p


def poly_add(p: Sequence[int], q: Sequence[int]) -> list[int]:
    out = [0] * max(len(p), len(q))
    for i, c in enumerate(p):
        out[i] = c
    for i, c in enumerate(q):
        out[i] ^= c
    return out


def poly_mul(p: Sequence[int], q: Sequence[int]) -> list[int]:
    out = [0] * (len(p) + len(q) - 1)
    for i, a in enumerate(p):
        if a == 0:
            continue
        la = LOG[a]
        for j, b in enumerate(q):
            if b:
                out[i + j] ^= EXP[la + LOG[b]]
    return out


def poly_scale(p: Sequence[int], c: int) -> list[int]:
    return [gf_mul(a, c) for a in p]


def poly_eval(p: Sequence[int], x: int) -> int:
    acc = 0
    for c in reversed(p):
        acc = gf_mul(acc, x) ^ c
    return acc


def poly_degree(p: Sequence[int]) -> int:
    for i in range(len(p) - 1, -1, -1):
        if p[i]:
            return i
    return -1


@dataclass(frozen=True)
class RsConfig:
    """Shortened Reed-Solomon code parameters over GF(2^8)."""

    n: int = 64
    k: int = 48
    symbol_bits: int = 8
    field_polynomial: int = FIELD_POLY
    first_root_exponent: int = 0

    def __post_init__(self):
        if not 1 <= self.k <= self.n <= _ORDER:
            raise ValueError(f"need 1 <= k <= n <= 255, got n={self.n} k={self.k}")
        if self.symbol_bits != 8 or self.field_polynomial != FIELD_POLY:
            raise ValueError("only GF(2^8) with field polynomial 0x11D is supported")

    @property
    def nsym(self) -> int:
        return self.n - self.k

    @property
    def min_distance(self) -> int:
        return self.n - self.k + 1


@dataclass
class DecodeOutcome:
    status: str
    message: bytes | None = None
    errors_found: int = 0
    erasures_used: int = 0

    @property
    def ok(self) -> bool:
        return self.status == "corrected"


def _locator(config: RsConfig, pos: int) -> int:
    return EXP[(config.n - 1 - pos) % _ORDER]


def rs_generator(config: RsConfig) -> list[int]:
    g = [1]
    for j in range(config.nsym):
        g = poly_mul(g, [EXP[(j + config.first_root_exponent) % _ORDER], 1])
    return g


def _as_symbols(data: Iterable[int], length: int, what: str) -> list[int]:
    out = list(data)
    if len(out) != length:
        raise ValueError(f"{what} must have {length} symbols, got {len(out)}")
    for s in out:
        if not 0 <= s < FIELD_SIZE:
            raise ValueError(f"symbol {s!r} out of range for GF(256)")
    return out


def rs_encode(message: Iterable[int], config: RsConfig) -> bytes:
    msg = _as_symbols(message, config.k, "message")
    nsym = config.nsym
    if nsym == 0:
        return bytes(msg)
    gen = rs_generator(config)  # monic, degree nsym
    # long division of m(x) * x^nsym by g(x), working from the top coefficient down
    rem = msg + [0] * nsym
    for i in range(config.k):
        coef = rem[i]
        if coef:
            for j in range(1, nsym + 1):
                rem[i + j] ^= gf_mul(gen[nsym - j], coef)
    return bytes(msg + rem[config.k:])


def rs_syndromes(received: Sequence[int], config: RsConfig) -> list[int]:
    out = []
    for j in range(config.nsym):
        root = EXP[(j + config.first_root_exponent) % _ORDER]
        acc = 0
        for c in received:
            acc = gf_mul(acc, root) ^ c
        out.append(acc)
    return out


def _berlekamp_massey(synd: Sequence[int]) -> tuple[list[int], int]:
    """Shortest LFSR (connection polynomial, length) generating ``synd``."""
    c = [1] + [0] * len(synd)
    bx = [0, 1] + [0] * len(synd)  # x^m * B(x)
    length, b = 0, 1
    for r in range(len(synd)):
        d = synd[r]
        for i in range(1, length + 1):
            d ^= gf_mul(c[i], synd[r - i])
        if d == 0:
            bx = [0] + bx[:-1]
            continue
        coef = gf_div(d, b)
        new_c = [ci ^ gf_mul(coef, bi) for ci, bi in zip(c, bx)]
        if 2 * length <= r:
            bx = [0] + c[:-1]
            length = r + 1 - length
            b = d
        else:
            bx = [0] + bx[:-1]
        c = new_c
    return c, length


def rs_decode(
    received: Iterable[int],
    erasure_positions: Iterable[int] = (),
    config: RsConfig = RsConfig(),
) -> DecodeOutcome:
    """Correct up to ``e`` errors and ``f`` erasures whenever ``2e + f <= n - k``."""
    word = _as_symbols(received, config.n, "received word")
    erasures = sorted(set(erasure_positions))
    nsym, f = config.nsym, len(erasures)
    if f > nsym:
        raise ValueError(f"{f} erasures declared but the code has only {nsym} parity symbols")
    for p in erasures:
        if not 0 <= p < config.n:
            raise ValueError(f"erasure position {p} outside codeword of length {config.n}")

    synd = rs_syndromes(word, config)
    if not any(synd):
        return DecodeOutcome("corrected", bytes(word[: config.k]), 0, f)

    gamma = [1]
    for p in erasures:
        gamma = poly_mul(gamma, [1, _locator(config, p)])
    # modified syndromes: coefficients f..nsym-1 of gamma * S
    theta = poly_mul(gamma, synd)[:nsym]
    sigma, n_err = _berlekamp_massey(theta[f:])
    sigma = poly_trim(sigma)
    if 2 * n_err + f > nsym or poly_degree(sigma) != n_err:
        return DecodeOutcome("uncorrectable", erasures_used=f)

    lam = poly_mul(gamma, sigma)
    omega = poly_mul(synd, lam)[:nsym]
    dlam = [lam[i] if i % 2 == 1 else 0 for i in range(1, len(lam))]
    fcr = config.first_root_exponent
    fixed = list(word)
    n_roots = 0
    for p in range(config.n):
        x = _locator(config, p)
        x_inv = gf_inv(x)
        if poly_eval(lam, x_inv):
            continue
        n_roots += 1
        denom = poly_eval(dlam, x_inv)
        if denom == 0:
            return DecodeOutcome("uncorrectable", erasures_used=f)
        mag = gf_mul(gf_pow(x, 1 - fcr), gf_div(poly_eval(omega, x_inv), denom))
        fixed[p] ^= mag
    if n_roots != poly_degree(lam) or any(rs_syndromes(fixed, config)):
        return DecodeOutcome("uncorrectable", erasures_used=f)
    return DecodeOutcome("corrected", bytes(fixed[: config.k]), n_err, f)


# --------------------------------------------------------------------------
# row-batched codec

def _xor_reduce(a: np.ndarray, axis: int) -> np.ndarray:
    return np.bitwise_xor.reduce(a, axis=axis)


class _Tables:
    """Per-config power tables for the batched codec."""

    _cache: dict[RsConfig, "_Tables"] = {}

    def __init__(self, config: RsConfig):
        n, nsym, fcr = config.n, config.nsym, config.first_root_exponent
        exps = np.array([(n - 1 - p) % _ORDER for p in range(n)])
        exp_tab = np.array(EXP, dtype=np.int64)
        # X_p^(j + fcr): syndrome weights, shape (n, nsym)
        self.synd_pow = exp_tab[(exps[:, None] * (np.arange(nsym)[None, :] + fcr)) % _ORDER].astype(np.uint8)
        # X_p^(-i): evaluation points for locator polynomials, shape (n, nsym + 1)
        self.inv_pow = exp_tab[(-exps[:, None] * np.arange(nsym + 1)[None, :]) % _ORDER].astype(np.uint8)
        self.loc = exp_tab[exps].astype(np.uint8)
        self.forney_pow = exp_tab[(exps * (1 - fcr)) % _ORDER].astype(np.uint8)
        parity = np.zeros((config.k, nsym), dtype=np.uint8)
        for i in range(config.k):
            unit = [0] * config.k
            unit[i] = 1
            parity[i] = np.frombuffer(rs_encode(unit, config)[config.k:], dtype=np.uint8)
        self.parity = parity

    @classmethod
    def get(cls, config: RsConfig) -> "_Tables":
        if config not in cls._cache:
            cls._cache[config] = cls(config)
        return cls._cache[config]


def _poly_eval_rows(coefs: np.ndarray, points: np.ndarray) -> np.ndarray:
    """Evaluate row polynomials (R, d) at precomputed powers (n, >=d) -> (R, n)."""
    d = coefs.shape[1]
    return _xor_reduce(MUL[coefs[:, None, :], points[None, :, :d]], axis=2)


def _poly_mul_rows(p: np.ndarray, q: np.ndarray, size: int) -> np.ndarray:
    out = np.zeros((p.shape[0], size), dtype=np.uint8)
    for i in range(min(p.shape[1], size)):
        span = min(q.shape[1], size - i)
        out[:, i : i + span] ^= MUL[p[:, i : i + 1], q[:, :span]]
    return out


def encode_rows(messages: np.ndarray, config: RsConfig = RsConfig()) -> np.ndarray:
    """Systematically encode each row of a ``(rows, k)`` uint8 matrix."""
    msgs = np.asarray(messages, dtype=np.uint8)
    if msgs.ndim != 2 or msgs.shape[1] != config.k:
        raise ValueError(f"expected (rows, {config.k}) message matrix, got {msgs.shape}")
    if config.nsym == 0 or msgs.shape[0] == 0:
        return np.concatenate([msgs, np.zeros((msgs.shape[0], config.nsym), np.uint8)], axis=1)
    par = _Tables.get(config).parity
    parity = _xor_reduce(MUL[msgs[:, :, None], par[None, :, :]], axis=1)
    return np.concatenate([msgs, parity], axis=1)


def syndromes_rows(received: np.ndarray, config: RsConfig = RsConfig()) -> np.ndarray:
    tab = _Tables.get(config)
    return _xor_reduce(MUL[received[:, :, None], tab.synd_pow[None, :, :]], axis=1)


@dataclass
class RowDecodeResult:
    """Outcome of :func:`decode_rows`; arrays are indexed by row."""

    messages: np.ndarray
    ok: np.ndarray
    errors_found: np.ndarray
    erasures_used: np.ndarray
    corrected_words: np.ndarray = field(repr=False)

    def outcome(self, row: int) -> DecodeOutcome:
        if self.ok[row]:
            return DecodeOutcome("corrected", self.messages[row].tobytes(),
                                 int(self.errors_found[row]), int(self.erasures_used[row]))
        return DecodeOutcome("uncorrectable", None, 0, int(self.erasures_used[row]))


def decode_rows(
    received: np.ndarray,
    erasures: np.ndarray | Sequence[int] | None = None,
    config: RsConfig = RsConfig(),
) -> RowDecodeResult:
    """Errors-and-erasures decode every row of a ``(rows, n)`` uint8 matrix.

    ``erasures`` is either a list of positions shared by every row or a boolean
    ``(rows, n)`` mask.  Rows that violate ``2e + f <= n - k`` are flagged in
    ``ok``; their ``messages`` entry holds the uncorrected prefix.
    """
    words = np.array(received, dtype=np.uint8, copy=True)
    if words.ndim != 2 or words.shape[1] != config.n:
        raise ValueError(f"expected (rows, {config.n}) matrix, got {words.shape}")
    rows, n, nsym = words.shape[0], config.n, config.nsym
    if erasures is None:
        emask = np.zeros((rows, n), dtype=bool)
    else:
        e = np.asarray(erasures)
        if e.dtype == bool:
            emask = np.broadcast_to(e, (rows, n)).copy()
        else:
            if e.size and (e.min() < 0 or e.max() >= n):
                raise ValueError("erasure position outside codeword")
            emask = np.zeros((rows, n), dtype=bool)
            emask[:, np.unique(e.astype(int))] = True
    f = emask.sum(axis=1)
    if (f > nsym).any():
        raise ValueError(f"more than {nsym} erasures declared in a row")

    ok = np.ones(rows, dtype=bool)
    n_err = np.zeros(rows, dtype=np.int64)
    result = RowDecodeResult(words[:, : config.k].copy(), ok, n_err, f, words)
    if rows == 0 or nsym == 0:
        return result
    tab = _Tables.get(config)
    synd = syndromes_rows(words, config)
    bad = synd.any(axis=1)
    if not bad.any():
        return result

    idx = np.flatnonzero(bad)
    S, em, fr = synd[idx], emask[idx], f[idx]
    m = len(idx)
    width = nsym + 2

    gamma = np.zeros((m, width), dtype=np.uint8)
    gamma[:, 0] = 1
    for p in np.flatnonzero(em.any(axis=0)):
        sel = em[:, p]
        shifted = np.zeros_like(gamma)
        shifted[:, 1:] = MUL[gamma[:, :-1], tab.loc[p]]
        gamma[sel] ^= shifted[sel]

    theta = _poly_mul_rows(gamma, S, nsym)
    # modified syndromes T_j = theta_{j+f}, usable for j < nsym - f
    jj = np.arange(nsym)[None, :] + fr[:, None]
    T = np.where(jj < nsym, np.take_along_axis(theta, np.minimum(jj, nsym - 1), axis=1), 0).astype(np.uint8)
    usable = nsym - fr

    C = np.zeros((m, width), dtype=np.uint8)
    C[:, 0] = 1
    Bx = np.zeros((m, width), dtype=np.uint8)
    Bx[:, 1] = 1
    L = np.zeros(m, dtype=np.int64)
    b = np.ones(m, dtype=np.uint8)
    for r in range(nsym):
        active = r < usable
        lag = min(r, width - 1)
        d = _xor_reduce(MUL[C[:, : lag + 1], T[:, r - lag : r + 1][:, ::-1]], axis=1)
        nz = active & (d != 0)
        grow = nz & (2 * L <= r)
        coef = MUL[d, INV[b]]
        newC = C ^ MUL[coef[:, None], Bx]
        shiftB = np.zeros_like(Bx)
        shiftB[:, 1:] = Bx[:, :-1]
        shiftC = np.zeros_like(C)
        shiftC[:, 1:] = C[:, :-1]
        Bx = np.where(active[:, None], np.where(grow[:, None], shiftC, shiftB), Bx)
        C = np.where(nz[:, None], newC, C)
        L = np.where(grow, r + 1 - L, L)
        b = np.where(grow, d, b)

    def degree(p: np.ndarray) -> np.ndarray:
        nzp = p != 0
        return np.where(nzp.any(axis=1), p.shape[1] - 1 - np.argmax(nzp[:, ::-1], axis=1), -1)

    good = (2 * L + fr <= nsym) & (degree(C) == L)
    lam = _poly_mul_rows(gamma, C, nsym + 1)
    omega = _poly_mul_rows(S, lam, nsym)
    dlam = np.zeros((m, nsym), dtype=np.uint8)
    dlam[:, 0::2] = lam[:, 1::2][:, : (nsym + 1) // 2]

    lam_v = _poly_eval_rows(lam, tab.inv_pow)
    roots = lam_v == 0
    good &= roots.sum(axis=1) == degree(lam)
    om_v = _poly_eval_rows(omega, tab.inv_pow)
    dl_v = _poly_eval_rows(dlam, tab.inv_pow)
    good &= ~(roots & (dl_v == 0)).any(axis=1)
    mag = MUL[MUL[tab.forney_pow[None, :], om_v], INV[dl_v]]
    fixed = words[idx] ^ np.where(roots & good[:, None], mag, 0).astype(np.uint8)
    good &= ~syndromes_rows(fixed, config).any(axis=1)

    ok[idx] = good
    n_err[idx] = np.where(good, L, 0)
    words[idx] = np.where(good[:, None], fixed, words[idx])
    result.messages = words[:, : config.k].copy()
    return result
