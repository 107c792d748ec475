"""Fisher-zero cartography from an exact spectrum: contour counts, Jensen bounds, refinement and atlas output."""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .ed import Spectrum

FLOOR = 1e-8
MAX_DILATIONS = 5
INTEGER_TOL = 1e-2
NEWTON_MAXITER = 200
GL_NODES = 10
EPS = np.finfo(float).eps
MAX_RESOLUTION = 4096
# off-centre first: symmetric spectra put zeros on the midlines of symmetric rectangles
SPLITS = (0.4871, 0.5129, 0.4603, 0.5397, 0.4211)

_GX, _GW = np.polynomial.legendre.leggauss(GL_NODES)


class ZeroError(ValueError):
    pass


class BoundaryError(ZeroError):
    """The contour passes too close to a zero; perturb or dilate the rectangle."""


class NonIntegerCountError(ZeroError):
    pass


@dataclass(frozen=True)
class Rectangle:
    re_min: float
    re_max: float
    im_min: float
    im_max: float

    def __post_init__(self):
        vals = (self.re_min, self.re_max, self.im_min, self.im_max)
        if not all(math.isfinite(v) for v in vals):
            raise ZeroError("rectangle bounds must be finite")
        if not (self.re_min < self.re_max and self.im_min < self.im_max):
            raise ZeroError(f"empty rectangle {vals}")

    @property
    def center(self) -> complex:
        return complex((self.re_min + self.re_max) / 2, (self.im_min + self.im_max) / 2)

    @property
    def width(self) -> float:
        return self.re_max - self.re_min

    @property
    def height(self) -> float:
        return self.im_max - self.im_min

    def corners(self) -> list[complex]:
        """Counterclockwise from the lower-left corner."""
        return [complex(self.re_min, self.im_min), complex(self.re_max, self.im_min),
                complex(self.re_max, self.im_max), complex(self.re_min, self.im_max)]

    def dilate(self, frac: float) -> "Rectangle":
        dx, dy = frac * self.width / 2, frac * self.height / 2
        return Rectangle(self.re_min - dx, self.re_max + dx, self.im_min - dy, self.im_max + dy)

    def contains(self, z: complex, margin: float = 0.0) -> bool:
        return (self.re_min - margin <= z.real <= self.re_max + margin
                and self.im_min - margin <= z.imag <= self.im_max + margin)

    def split(self, fx: float = 0.5, fy: float = 0.5) -> list["Rectangle"]:
        xm = self.re_min + fx * self.width
        ym = self.im_min + fy * self.height
        return [Rectangle(self.re_min, xm, self.im_min, ym), Rectangle(xm, self.re_max, self.im_min, ym),
                Rectangle(self.re_min, xm, ym, self.im_max), Rectangle(xm, self.re_max, ym, self.im_max)]

    def to_list(self) -> list[float]:
        return [self.re_min, self.re_max, self.im_min, self.im_max]


@dataclass(frozen=True)
class Levels:
    """Distinct energies (shifted to mean zero) with degeneracies; Z(beta) = e^{-beta shift} sum g e^{-beta E}."""

    E: np.ndarray
    g: np.ndarray
    shift: float

    @classmethod
    def from_spectrum(cls, s: Spectrum, rtol: float = 1e-12) -> "Levels":
        e = np.sort(np.asarray(s.eigenvalues, dtype=float))
        if len(e) == 0:
            raise ZeroError("empty spectrum")
        scale = 1 + np.abs(e).max()
        brk = np.flatnonzero(np.diff(e) > rtol * scale) + 1
        starts = np.r_[0, brk]
        g = np.diff(np.r_[starts, len(e)]).astype(float)
        E = np.add.reduceat(e, starts) / g
        shift = float(np.dot(g, E) / g.sum())
        return cls(E - shift, g, shift)

    def _weights(self, beta):
        a = -np.asarray(beta, dtype=complex).ravel()[:, None] * self.E[None, :]
        return self.g * np.exp(a - a.real.max(axis=1, keepdims=True))

    def dlog(self, beta) -> np.ndarray:
        beta = np.asarray(beta, dtype=complex)
        out = np.empty(beta.size, dtype=complex)
        flat = beta.ravel()
        chunk = max(1, 2**21 // len(self.E))
        for i in range(0, len(flat), chunk):
            w = self._weights(flat[i:i + chunk])
            with np.errstate(divide="ignore", invalid="ignore"):
                out[i:i + chunk] = -(w @ self.E) / w.sum(axis=1) - self.shift
        return out.reshape(beta.shape)

    def dlog_ratio(self, beta):
        """d log Z and the cancellation ratio from one pass over the weights."""
        beta = np.asarray(beta, dtype=complex)
        d = np.empty(beta.size, dtype=complex)
        q = np.empty(beta.size)
        flat = beta.ravel()
        chunk = max(1, 2**21 // len(self.E))
        for i in range(0, len(flat), chunk):
            w = self._weights(flat[i:i + chunk])
            tot = w.sum(axis=1)
            with np.errstate(divide="ignore", invalid="ignore"):
                d[i:i + chunk] = -(w @ self.E) / tot - self.shift
            q[i:i + chunk] = np.abs(tot) / np.abs(w).sum(axis=1)
        return d.reshape(beta.shape), q.reshape(beta.shape)

    def ratio(self, beta) -> np.ndarray:
        """|Z| / sum |terms|: the cancellation ratio, small near zeros."""
        beta = np.asarray(beta, dtype=complex)
        out = np.empty(beta.size)
        flat = beta.ravel()
        chunk = max(1, 2**21 // len(self.E))
        for i in range(0, len(flat), chunk):
            w = self._weights(flat[i:i + chunk])
            out[i:i + chunk] = np.abs(w.sum(axis=1)) / np.abs(w).sum(axis=1)
        return out.reshape(beta.shape)

    def derivative_ratio(self, beta: complex, j: int) -> complex:
        """Z^{(j)} / Z^{(j+1)} for the shifted partition function."""
        w = self._weights(beta)[0]
        pw = (-self.E) ** j
        den = np.dot(w, pw * (-self.E))
        if den == 0:
            return complex(np.inf)
        return complex(np.dot(w, pw) / den)


# counting ----------------------------------------------------------------------


@dataclass(frozen=True)
class CountResult:
    value: complex
    rectangle: Rectangle
    dilations: int
    segments: int

    @property
    def n(self) -> int:
        return int(round(self.value.real))

    def __float__(self):
        return float(self.value.real)

    def __int__(self):
        return self.n


def _gl(z0: np.ndarray, z1: np.ndarray):
    """Gauss-Legendre nodes and weights on segments z0 -> z1 (rows)."""
    mid, half = (z0 + z1) / 2, (z1 - z0) / 2
    return mid[:, None] + half[:, None] * _GX[None, :], half[:, None] * _GW[None, :]


def _gl_sum(lv: Levels, z0: np.ndarray, z1: np.ndarray):
    """Gauss-Legendre integral of d log Z per segment, its roundoff scale, the minimum ratio at the
    nodes and the smallest Newton step 1/|d log Z| there (a lower bound on distance / multiplicity)."""
    nodes, w = _gl(z0, z1)
    d, q = lv.dlog_ratio(nodes)
    with np.errstate(divide="ignore"):
        reach = (1 / np.abs(d)).min(axis=1)
    return (d * w).sum(axis=1), (np.abs(d * w)).sum(axis=1), q.min(axis=1), reach


def _contour_integral(lv: Levels, r: Rectangle, floor: float, seg_tol: float = 1e-7, max_rounds: int = 60):
    """(1/2 pi i) times the integral of d log Z around r, adaptive per segment.

    A segment is accepted when the Gauss-Legendre value on it agrees with the
    sum over its halves, the phase change across it is below pi/4 and no node
    sees a zero closer than half a segment length. The last rule matters for
    zeros sitting exactly on the contour, where symmetric nodes would cancel
    the principal value. The halves of a rejected segment inherit their value
    from that comparison.
    """
    c = r.corners()
    per = 2 * (r.width + r.height)
    pieces = []
    for a, b in zip(c, c[1:] + c[:1]):
        m = max(4, math.ceil(abs(b - a) / per * 64))
        t = np.linspace(0, 1, m + 1)
        pieces.append((a + (b - a) * t[:-1], a + (b - a) * t[1:]))
    z0 = np.concatenate([p[0] for p in pieces])
    z1 = np.concatenate([p[1] for p in pieces])
    I1, _, q1, _ = _gl_sum(lv, z0, z1)
    if q1.min() < floor:
        raise BoundaryError("contour passes within the floor of a zero")
    total = 0j
    accepted = 0
    min_len = 1e-13 * (per + abs(r.center))
    for _ in range(max_rounds):
        if len(z0) == 0:
            break
        zm = (z0 + z1) / 2
        Il, al, ql, rl = _gl_sum(lv, np.concatenate([z0, zm]), np.concatenate([zm, z1]))
        if ql.min() < floor:
            raise BoundaryError("contour passes within the floor of a zero")
        n = len(z0)
        I2 = Il[:n] + Il[n:]
        seglen = np.abs(z1 - z0)
        # roundoff in d log Z grows like eps / (cancellation ratio)
        noise = 64 * EPS * (al[:n] + al[n:]) / np.minimum(ql[:n], ql[n:])
        tol_seg = seg_tol * np.maximum(seglen / per, 1e-3) + noise
        near = np.minimum(rl[:n], rl[n:]) < 0.25 * seglen
        ok = (np.abs(I1 - I2) < tol_seg) & (np.abs(I2.imag) < np.pi / 4) & np.isfinite(I2) & ~near
        if np.any(~ok & (seglen < min_len)):
            raise BoundaryError("contour segment collapsed; a zero lies on the boundary")
        total += math.fsum(I2[ok].real) + 1j * math.fsum(I2[ok].imag)
        accepted += int(ok.sum())
        bad = ~ok
        z0, z1 = np.concatenate([z0[bad], zm[bad]]), np.concatenate([zm[bad], z1[bad]])
        I1 = np.concatenate([Il[:n][bad], Il[n:][bad]])
    else:
        raise BoundaryError("adaptive contour refinement did not terminate")
    return total / (2j * np.pi), accepted


def _count(lv: Levels, r: Rectangle, floor: float, tol: float) -> CountResult:
    val, segs = _contour_integral(lv, r, floor)
    if abs(val - round(val.real)) >= tol:
        raise NonIntegerCountError(f"contour count {val.real:.6f}{val.imag:+.2e}i is not within {tol} of an integer")
    return CountResult(complex(val), r, 0, segs)


def count_zeros_rectangle(s: Spectrum | Levels, r: Rectangle, floor: float = FLOOR, tol: float = INTEGER_TOL,
                          max_dilations: int = MAX_DILATIONS) -> CountResult:
    """Zeros of Z inside r with multiplicity, by the argument principle.

    When the boundary comes within ``floor`` (cancellation ratio) of a zero the
    rectangle is dilated by 1% and retried; the result records the rectangle used.
    """
    lv = s if isinstance(s, Levels) else Levels.from_spectrum(s)
    if len(lv.E) == 1:
        return CountResult(0j, r, 0, 0)
    rect = r
    for attempt in range(max_dilations + 1):
        try:
            res = _count(lv, rect, floor, tol)
            return CountResult(res.value, rect, attempt, res.segments)
        except BoundaryError:
            rect = rect.dilate(0.01)
    raise BoundaryError(f"boundary of {r.to_list()} stays within the floor of a zero after "
                        f"{max_dilations} dilations; perturb the rectangle")


def jensen_zero_bound(s: Spectrum | Levels, R_outer: float, r_inner: float, quadrature: int = 512) -> float:
    """Upper bound on the zeros in |beta| < r_inner from the mean of log|Z/Z(0)| on |beta| = R_outer."""
    if not 0 < r_inner < R_outer:
        raise ZeroError("need 0 < r_inner < R_outer")
    lv = s if isinstance(s, Levels) else Levels.from_spectrum(s)
    if len(lv.E) == 1:
        return 0.0
    theta = 2 * np.pi * np.arange(quadrature) / quadrature
    beta = R_outer * np.exp(1j * theta)
    if lv.ratio(beta).min() < 1e-13:
        raise ZeroError("a quadrature node lies on a zero of Z; change R_outer or the quadrature size")
    lz = _log_abs(lv, beta)
    lz0 = math.log(lv.g.sum())
    mean = math.fsum(lz - lz0) / quadrature
    return max(0.0, mean / math.log(R_outer / r_inner))


def _log_abs(lv: Levels, beta: np.ndarray) -> np.ndarray:
    """log|Z(beta)| with the mean-energy shift removed and restored."""
    beta = np.asarray(beta, dtype=complex)
    a = -beta.ravel()[:, None] * lv.E[None, :]
    top = a.real.max(axis=1)
    w = lv.g * np.exp(a - top[:, None])
    with np.errstate(divide="ignore"):
        out = np.log(np.abs(w.sum(axis=1))) + top - beta.ravel().real * lv.shift
    return out.reshape(beta.shape)


def log_z(lv: Levels, beta) -> np.ndarray:
    """Complex log Z(beta); arg is principal."""
    beta = np.asarray(beta, dtype=complex)
    a = -beta.ravel()[:, None] * lv.E[None, :]
    top = a.real.max(axis=1)
    w = lv.g * np.exp(a - top[:, None])
    with np.errstate(divide="ignore"):
        out = np.log(w.sum(axis=1)) + top - beta.ravel() * lv.shift
    out.imag = np.angle(np.exp(1j * out.imag))
    return out.reshape(beta.shape)


# refinement ----------------------------------------------------------------------


@dataclass
class Zero:
    location: complex
    multiplicity: int
    residual: float
    resolved: bool = True
    iterations: int = 0

    def to_dict(self) -> dict:
        return {"re": self.location.real, "im": self.location.imag, "multiplicity": self.multiplicity,
                "residual": self.residual, "resolved": self.resolved}


@dataclass
class ZeroAtlas:
    rectangle: Rectangle
    zeros: list = field(default_factory=list)
    counts: dict = field(default_factory=dict)
    grid: dict | None = None

    @property
    def total(self) -> int:
        return sum(z.multiplicity for z in self.zeros)

    @property
    def unresolved(self) -> list:
        return [z for z in self.zeros if not z.resolved]

    def locations(self) -> np.ndarray:
        return np.array([z.location for z in self.zeros], dtype=complex)

    def zeros_json(self) -> str:
        return json.dumps([z.to_dict() for z in self.zeros], indent=2)

    def to_dict(self) -> dict:
        return {"rectangle": self.rectangle.to_list(), "count": self.counts.get("total"), "zeros": [z.to_dict() for z in self.zeros],
                "unresolved": len(self.unresolved)}


def newton_zero(lv: Levels, beta0: complex, m: int = 1, maxiter: int = NEWTON_MAXITER, tol: float = 1e-14):
    """Newton on Z^{(m-1)}, whose zero is simple at an m-fold zero of Z.

    Returns (beta, residual, iterations, converged); the residual is the last
    step |Z^{(m-1)}/Z^{(m)}|, which for m = 1 is |Z/Z'|.
    """
    beta = complex(beta0)
    step = complex(np.inf)
    for it in range(1, maxiter + 1):
        step = lv.derivative_ratio(beta, m - 1)
        if not np.isfinite(step):
            return beta, 0.0, it, True
        beta -= step
        if abs(step) < tol * (1 + abs(beta)):
            return beta, abs(lv.derivative_ratio(beta, m - 1)), it, True
    return beta, abs(step), maxiter, False


def _box(z: complex, h: float) -> Rectangle:
    return Rectangle(z.real - h, z.real + h, z.imag - h, z.imag + h)


def _children(lv, cell, c, floor, tol):
    for fx in SPLITS:
        fy = fx
        kids = cell.split(fx, fy)
        try:
            counts = [_count(lv, k, floor, tol).n for k in kids]
        except (BoundaryError, NonIntegerCountError):
            continue
        if sum(counts) == c:
            return list(zip(kids, counts))
    return None


def _seeded_simple_roots(lv: Levels, cell: Rectangle, c: int):
    """c distinct simple roots inside the cell from a grid of Newton seeds, or None."""
    side = math.ceil(math.sqrt(max(16, 4 * c)))
    fx = (np.arange(side) + 0.5) / side
    roots: list[Zero] = []
    for y in fx:
        for x in fx:
            seed = complex(cell.re_min + x * cell.width, cell.im_min + y * cell.height)
            z, res, its, conv = newton_zero(lv, seed, 1, maxiter=60)
            if not conv or not cell.contains(z, 1e-9 * (1 + abs(z))):
                continue
            if res > 1e-9 * (1 + abs(z)):
                continue
            if all(abs(z - r.location) > 1e-7 * (1 + abs(z)) for r in roots):
                roots.append(Zero(z, 1, res, True, its))
                if len(roots) > c:
                    return None
    return roots if len(roots) == c else None


def _resolve(lv: Levels, cell: Rectangle, c: int, floor: float, tol: float, depth: int, max_depth: int,
             pool=None) -> list[Zero]:
    if c == 0:
        return []
    size = min(cell.width, cell.height)
    z, res, its, conv = newton_zero(lv, cell.center, c)
    if conv and cell.contains(z, 1e-9 * (1 + abs(z))):
        if c == 1:
            return [Zero(z, 1, res, True, its)]
        # the cancellation ratio near an m-fold zero scales like h^m
        h = min(max(1e-7, min(1e-3, size / 4), 4 * floor ** (1 / c)), 0.25)
        try:
            if _count(lv, _box(z, h), floor, tol).n == c:
                return [Zero(z, c, res, True, its)]
        except (BoundaryError, NonIntegerCountError):
            pass
    if c > 1:
        found = _seeded_simple_roots(lv, cell, c)
        if found is not None:
            return found
    if depth >= max_depth or size < 1e-9:
        return [Zero(cell.center, c, res, False, its)]
    kids = _children(lv, cell, c, floor, tol)
    if kids is None:
        return [Zero(cell.center, c, res, False, its)]
    work = lambda kc: _resolve(lv, kc[0], kc[1], floor, tol, depth + 1, max_depth)  # noqa: E731
    parts = pool.map(work, kids) if pool is not None else map(work, kids)
    return [z for p in parts for z in p]


def locate_zeros(s: Spectrum | Levels, r: Rectangle, floor: float = FLOOR, tol: float = INTEGER_TOL,
                 max_depth: int = 40, jobs: int = 1, max_dilations: int = MAX_DILATIONS) -> ZeroAtlas:
    """All zeros in r: quadrisection until a cell's count is explained by one Newton root.

    Multiplicities come from the cell counts. Cells that cannot be resolved are
    kept with ``resolved = False`` so that the multiplicities still add up.
    """
    lv = s if isinstance(s, Levels) else Levels.from_spectrum(s)
    cr = count_zeros_rectangle(lv, r, floor, tol, max_dilations)
    atlas = ZeroAtlas(cr.rectangle, counts={"total": cr.n, "raw": float(cr)})
    if cr.n == 0:
        return atlas
    # the pool only runs the top-level quadrants; the decomposition does not depend on jobs
    if jobs > 1:
        with ThreadPoolExecutor(jobs) as ex:
            atlas.zeros = _resolve(lv, cr.rectangle, cr.n, floor, tol, 0, max_depth, ex)
    else:
        atlas.zeros = _resolve(lv, cr.rectangle, cr.n, floor, tol, 0, max_depth)
    atlas.zeros.sort(key=lambda z: (round(z.location.imag, 9), z.location.real))
    return atlas


def match_zeros(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Distance from each zero in a to its partner in b (optimal assignment)."""
    from scipy.optimize import linear_sum_assignment

    a, b = np.asarray(a, dtype=complex), np.asarray(b, dtype=complex)
    if len(a) == 0 or len(b) == 0:
        return np.array([])
    cost = np.abs(a[:, None] - b[None, :])
    i, j = linear_sum_assignment(cost)
    return cost[i, j]


# grids and images ----------------------------------------------------------------------


def evaluate_grid(s: Spectrum | Levels, r: Rectangle, resolution, jobs: int = 1) -> dict:
    """log Z on a pixel-centred grid; row 0 is the top (largest Im beta)."""
    lv = s if isinstance(s, Levels) else Levels.from_spectrum(s)
    nx, ny = (resolution, resolution) if np.isscalar(resolution) else resolution
    if not (1 <= nx <= MAX_RESOLUTION and 1 <= ny <= MAX_RESOLUTION):
        raise ZeroError(f"resolution must lie in [1, {MAX_RESOLUTION}] per axis")
    re = r.re_min + (np.arange(nx) + 0.5) * r.width / nx
    im = r.im_max - (np.arange(ny) + 0.5) * r.height / ny
    B = re[None, :] + 1j * im[:, None]
    if jobs > 1:
        with ThreadPoolExecutor(jobs) as ex:
            rows = list(ex.map(lambda row: log_z(lv, row), B))
        L = np.array(rows)
    else:
        L = log_z(lv, B)
    return {"re": re, "im": im, "beta": B, "logz": L}


def grid_csv(grid: dict) -> str:
    lines = ["beta_re,beta_im,log_abs_z,arg_z"]
    for b, l in zip(grid["beta"].ravel(), grid["logz"].ravel()):
        lines.append(f"{b.real:.17g},{b.imag:.17g},{l.real:.17g},{l.imag:.17g}")
    return "\n".join(lines) + "\n"


def hsv_to_rgb(h, s, v):
    """Vectorized colorsys.hsv_to_rgb for arrays in [0, 1]."""
    h, s, v = np.broadcast_arrays(*(np.asarray(a, dtype=float) for a in (h, s, v)))
    i = np.floor(h * 6.0).astype(int) % 6
    f = h * 6.0 - np.floor(h * 6.0)
    p, q, t = v * (1 - s), v * (1 - s * f), v * (1 - s * (1 - f))
    r = np.choose(i, [v, q, p, p, t, v])
    g = np.choose(i, [t, v, v, q, p, p])
    b = np.choose(i, [p, p, t, v, v, q])
    return np.stack([r, g, b], axis=-1)


def render_map(s: Spectrum | Levels, r: Rectangle, resolution=512, gamma: float = 0.15, grid: dict | None = None,
               jobs: int = 1) -> bytes:
    """Binary PPM: hue from arg Z, value (|Z| / max |Z|)^gamma, full saturation."""
    if grid is None:
        grid = evaluate_grid(s, r, resolution, jobs)
    L = grid["logz"]
    ny, nx = L.shape
    lr = np.where(np.isfinite(L.real), L.real, -np.inf)
    v = np.exp(gamma * (lr - lr.max()))
    hue = np.mod(L.imag / (2 * np.pi), 1.0)
    rgb = hsv_to_rgb(hue, np.ones_like(v), v)
    pix = np.clip(np.rint(rgb * 255), 0, 255).astype(np.uint8)
    return f"P6 {nx} {ny} 255\n".encode() + pix.tobytes()
