"""Raster images of filled Julia sets, Schwarz tilings and blow-up sequences.

An ImageGrid stores one small integer code per pixel plus a palette; PPM
output of the codes is the bit-exact artifact, PNG is a convenience.
Row 0 is the top of the picture.
"""
from __future__ import annotations

import io
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import kernels
from . import poly as P
from .schwarz import SigmaStarMap

# julia codes
BOUNDED, ESC_EVEN, ESC_ODD, RAY, EQUIPOTENTIAL = 0, 1, 2, 3, 4
# schwarz codes: tile level k is TILE0 + k
UNDECIDED, BASIN, TILE0 = 0, 1, 2


@dataclass(frozen=True)
class Viewport:
    center: complex
    width: float
    nx: int
    ny: int

    def __post_init__(self):
        if not (self.width > 0 and self.nx > 0 and self.ny > 0):
            raise ValueError("viewport needs positive width and pixel dimensions")

    @property
    def pixel(self) -> float:
        return self.width / self.nx

    @property
    def height(self) -> float:
        return self.pixel * self.ny

    def axes(self):
        return kernels.pixel_grid(complex(self.center), float(self.width), self.nx, self.ny)

    def to_pixel(self, z: complex):
        """Fractional (col, row) of a point; pixel centers sit at integers."""
        h = self.pixel
        col = (z.real - self.center.real) / h + self.nx / 2 - 0.5
        row = (self.center.imag - z.imag) / h + self.ny / 2 - 0.5
        return col, row

    def rescaled(self, z: complex, r: float) -> "Viewport":
        """Viewport showing (set - z) / r through this window."""
        return Viewport(z + r * complex(self.center), r * self.width, self.nx, self.ny)


def _julia_palette():
    pal = np.zeros((256, 3), dtype=np.uint8)
    pal[BOUNDED] = (0, 0, 0)
    pal[ESC_EVEN] = (235, 235, 235)
    pal[ESC_ODD] = (200, 210, 230)
    pal[RAY] = (220, 40, 40)
    pal[EQUIPOTENTIAL] = (40, 120, 220)
    return pal


def _schwarz_palette():
    pal = np.zeros((256, 3), dtype=np.uint8)
    pal[UNDECIDED] = (255, 0, 255)
    pal[BASIN] = (240, 240, 240)
    pal[TILE0] = (20, 20, 20)
    for k in range(1, 256 - TILE0):
        shade = 60 + (k * 37) % 150
        pal[TILE0 + k] = (shade, 90 + (k % 2) * 60, 255 - shade)
    return pal


@dataclass
class ImageGrid:
    codes: np.ndarray          # (ny, nx) uint8
    palette: np.ndarray        # (256, 3) uint8
    viewport: Viewport
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.codes.shape != (self.viewport.ny, self.viewport.nx):
            raise ValueError("code array does not match the viewport")

    def rgb(self) -> np.ndarray:
        return self.palette[self.codes]

    def to_ppm(self) -> bytes:
        v = self.viewport
        return f"P6\n{v.nx} {v.ny}\n255\n".encode() + self.rgb().tobytes()

    def to_png(self) -> bytes:
        from PIL import Image
        buf = io.BytesIO()
        Image.fromarray(self.rgb(), "RGB").save(buf, format="PNG")
        return buf.getvalue()

    def save(self, path, fmt: str | None = None):
        fmt = fmt or str(path).rsplit(".", 1)[-1].lower()
        data = {"ppm": self.to_ppm, "png": self.to_png}[fmt]()
        with open(path, "wb") as fh:
            fh.write(data)

    def counts(self) -> dict:
        vals, n = np.unique(self.codes, return_counts=True)
        return {int(a): int(b) for a, b in zip(vals, n)}

    def to_json(self):
        v = self.viewport
        return {"viewport": {"center": [v.center.real, v.center.imag], "width": v.width,
                             "nx": v.nx, "ny": v.ny},
                "counts": {str(k): c for k, c in self.counts().items()}, "meta": self.meta}


def read_ppm(data: bytes) -> np.ndarray:
    """RGB array from P6 bytes written by ImageGrid.to_ppm."""
    head = data.split(b"\n", 3)
    if head[0] != b"P6":
        raise ValueError("not a binary PPM")
    nx, ny = map(int, head[1].split())
    return np.frombuffer(head[3], dtype=np.uint8).reshape(ny, nx, 3)


# ---------------------------------------------------------------- julia sets

def green_grid(m: P.PolynomialModel, vp: Viewport, maxiter: int, big: float = 1e8) -> np.ndarray:
    """Approximate Green's function per pixel (0 where the orbit stays bounded)."""
    xs, ys = vp.axes()
    z = xs[None, :] + 1j * ys[:, None]
    G = np.zeros(z.shape)
    live = np.ones(z.shape, dtype=bool)
    lam = abs(m.boettcher_scale)
    d = m.degree
    with np.errstate(over="ignore", invalid="ignore"):
        for n in range(maxiter):
            esc = live & (np.abs(z) > big)
            G[esc] = np.log(lam * np.abs(z[esc])) / d ** n
            live &= ~esc
            if not live.any():
                break
            z[live] = m(z[live])
    return G


def _mark_level(G: np.ndarray, level: float) -> np.ndarray:
    """Pixels next to a crossing of G = level, the nearer side of each crossing."""
    out = np.zeros(G.shape, dtype=bool)
    D = G - level
    pos = (D > 0) & (G > 0)
    for axis in (0, 1):
        a = [slice(None)] * 2
        b = [slice(None)] * 2
        a[axis] = slice(None, -1)
        b[axis] = slice(1, None)
        a, b = tuple(a), tuple(b)
        cross = pos[a] != pos[b]
        closer = np.abs(D[a]) <= np.abs(D[b])
        out[a] |= cross & closer
        out[b] |= cross & ~closer
    return out


def _mark_polyline(vp: Viewport, pts) -> np.ndarray:
    mask = np.zeros((vp.ny, vp.nx), dtype=bool)
    pts = [complex(p) for p in pts]
    for z0, z1 in zip(pts, pts[1:]):
        n = max(2, int(math.ceil(2 * abs(z1 - z0) / vp.pixel)) + 1)
        for t in np.linspace(0, 1, n):
            c, r = vp.to_pixel(z0 + t * (z1 - z0))
            i, j = int(round(c)), int(round(r))
            if 0 <= i < vp.nx and 0 <= j < vp.ny:
                mask[j, i] = True
    return mask


def render_julia(model_id: str, vp: Viewport, maxiter: int = 500, rays=(), equipotentials=(),
                 ray_potential: float = 1e-5, use_numba: bool | None = None) -> ImageGrid:
    """Filled Julia set of a registered model with optional overlays.

    ``equipotentials`` are exponents m for the levels 1/2^m of Green's
    function; ``rays`` are external angles.
    """
    m = P.model(model_id)
    xs, ys = vp.axes()
    esc = kernels.escape_time_grid(m.coeffs, xs, ys, m.escape_radius, maxiter, use_numba)
    codes = np.where(esc < 0, BOUNDED, np.where(esc % 2 == 0, ESC_EVEN, ESC_ODD)).astype(np.uint8)
    meta = {"model": model_id, "maxiter": maxiter}
    if equipotentials:
        G = green_grid(m, vp, maxiter)
        for k in equipotentials:
            codes[_mark_level(G, 2.0 ** -k)] = EQUIPOTENTIAL
        meta["equipotentials"] = [2.0 ** -k for k in equipotentials]
    if rays:
        meta["rays"] = {}
        for theta in rays:
            if isinstance(theta, float):
                theta = Fraction(theta).limit_denominator(10 ** 6)
            ray = P.land_ray(m, Fraction(theta), ray_potential)
            end = ray.landing if ray.landing is not None else ray.endpoint
            codes[_mark_polyline(vp, list(ray.points) + [end])] = RAY
            meta["rays"][str(ray.angle)] = [end.real, end.imag]
    return ImageGrid(codes, _julia_palette(), vp, meta)


# ---------------------------------------------------------------- schwarz

def render_schwarz(f: SigmaStarMap, vp: Viewport, maxiter: int = 60,
                   escape_radius: float = 1e3, use_numba: bool | None = None) -> ImageGrid:
    """Tiling set colored by first-entry level, basin and undecided pixels apart."""
    xs, ys = vp.axes()
    kind, level = kernels.schwarz_grid(f.laurent, xs, ys, escape_radius, maxiter, use_numba)
    codes = np.full(kind.shape, UNDECIDED, dtype=np.uint8)
    codes[kind == kernels.BASIN] = BASIN
    tile = kind == kernels.TILE
    codes[tile] = TILE0 + np.minimum(level[tile], 255 - TILE0)
    meta = {"d": f.d, "maxiter": maxiter, "escape_radius": escape_radius}
    return ImageGrid(codes, _schwarz_palette(), vp, meta)


# ---------------------------------------------------------------- blow-ups

def blowup_sequence(source, z: complex, radii, frame: Viewport, maxiter: int = 500,
                    use_numba: bool | None = None) -> list:
    """Frames of (set - z) / r_k, each seen through the rescaled ``frame``.

    ``source`` is a model id or a SigmaStarMap.
    """
    out = []
    for r in radii:
        vp = frame.rescaled(complex(z), float(r))
        if isinstance(source, SigmaStarMap):
            g = render_schwarz(source, vp, maxiter, use_numba=use_numba)
        else:
            g = render_julia(source, vp, maxiter, use_numba=use_numba)
        g.meta["radius"] = float(r)
        out.append(g)
    return out


def filled_mask(g: ImageGrid) -> np.ndarray:
    if "model" in g.meta:
        return g.codes == BOUNDED
    return g.codes >= TILE0


def boundary_mask(g: ImageGrid) -> np.ndarray:
    """Filled pixels with an unfilled 4-neighbor."""
    f = filled_mask(g)
    pad = np.pad(f, 1, mode="edge")
    inner = pad[:-2, 1:-1] & pad[2:, 1:-1] & pad[1:-1, :-2] & pad[1:-1, 2:]
    return f & ~inner


def flatness(g: ImageGrid) -> float:
    """Spread of the boundary pixels across their main direction, over the spread along it.

    Near 0 for a set that looks like a line, near 1 for a round one.
    """
    j, i = np.nonzero(boundary_mask(g))
    if i.size < 3:
        return 0.0
    cov = np.cov(np.vstack([i, j]).astype(float))
    lo, hi = np.linalg.eigvalsh(cov)
    return float(math.sqrt(max(lo, 0.0) / hi)) if hi > 0 else 0.0
