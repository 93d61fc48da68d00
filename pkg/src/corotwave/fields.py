"""Field containers and their disk formats.

A RadialField is a sampled radial function tagged by the space it lives
in: "map" for inclination-angle maps u(r) (boundary values 0 and pi for
the topologically nontrivial class) and "gauge" for gauge-derivative-side
functions w(r).  CSV rows are `r,value,space_tag` with a JSON sidecar
describing the grid grading.

A SpectralDensity samples a distorted Fourier density on a FrequencyGrid
and remembers which calculus it belongs to ("H" or "Htilde").
"""

from __future__ import annotations

import json
import os

import numpy as np

from .grids import FrequencyGrid, RadialGrid


class RadialField:
    def __init__(self, grid, values, space_tag, topological=False):
        if space_tag not in ("map", "gauge"):
            raise ValueError("space_tag must be 'map' or 'gauge'")
        values = np.asarray(values, dtype=float)
        if values.shape != grid.r.shape:
            raise ValueError("values do not match grid")
        self.grid = grid
        self.values = values
        self.space_tag = space_tag
        self.topological = topological
        if topological and space_tag == "map":
            self._check_boundary()

    def _check_boundary(self):
        v0 = self.values[0] / max(self.grid.r_min, 1e-300)
        if abs(self.values[0]) > 0.2 and not np.isfinite(v0):
            raise ValueError("map field does not vanish at the origin")
        if abs(self.values[-1] - np.pi) > 0.5:
            raise ValueError("topological map field must approach pi")

    def copy_with(self, values, space_tag=None):
        return RadialField(self.grid, values, space_tag or self.space_tag,
                           topological=False)

    def write_csv(self, path):
        arr = np.column_stack([self.grid.r, self.values])
        header = "r,value,space_tag"
        tag = self.space_tag
        with open(path, "w") as fh:
            fh.write(header + "\n")
            for r, v in arr:
                fh.write(f"{float(r)!r},{float(v)!r},{tag}\n")
        side = {
            "grid": self.grid.descriptor,
            "n": self.grid.n,
            "topological": self.topological,
        }
        with open(_sidecar(path), "w") as fh:
            json.dump(side, fh, indent=1, sort_keys=True)

    @classmethod
    def read_csv(cls, path):
        rows = np.genfromtxt(path, delimiter=",", skip_header=1,
                             dtype=None, encoding="utf-8")
        r = np.array([row[0] for row in rows], dtype=float)
        v = np.array([row[1] for row in rows], dtype=float)
        tag = str(rows[0][2])
        with open(_sidecar(path)) as fh:
            side = json.load(fh)
        grid = RadialGrid(r, side.get("grid"))
        return cls(grid, v, tag, topological=side.get("topological", False))


def _sidecar(path):
    base, _ = os.path.splitext(path)
    return base + ".grid.json"


class SpectralDensity:
    """Distorted Fourier density sampled on a frequency grid.

    The calculus tag is fixed at creation.  Values are real for
    densities of real radial functions; complex values are allowed for
    intermediate states.
    """

    def __init__(self, fgrid, values, calculus):
        if calculus not in ("H", "Htilde"):
            raise ValueError("calculus must be 'H' or 'Htilde'")
        values = np.asarray(values)
        if not np.iscomplexobj(values):
            values = values.astype(float)
        if values.shape != fgrid.xi.shape:
            raise ValueError("values do not match frequency grid")
        if not np.all(np.isfinite(values)):
            raise ValueError("density values must be finite")
        self.fgrid = fgrid
        self.values = values
        self._calculus = calculus

    @property
    def calculus(self):
        return self._calculus

    def copy_with(self, values, calculus=None):
        return SpectralDensity(self.fgrid, values, calculus or self.calculus)

    def l2_norm(self):
        return float(np.sqrt(self.fgrid.integrate(np.abs(self.values) ** 2)))

    def write_csv(self, path):
        kk = self.fgrid.dyadic_index()
        cplx = np.iscomplexobj(self.values)
        with open(path, "w") as fh:
            fh.write("xi,k,value\n")
            for j in range(self.fgrid.xi.size):
                v = (repr(complex(self.values[j])) if cplx
                     else repr(float(self.values[j])))
                fh.write(f"{float(self.fgrid.xi[j])!r},{int(kk[j])},{v}\n")
        side = {"frequency_grid": self.fgrid.descriptor(),
                "calculus": self.calculus}
        with open(_freq_sidecar(path), "w") as fh:
            json.dump(side, fh, indent=1, sort_keys=True)

    @classmethod
    def read_csv(cls, path):
        with open(_freq_sidecar(path)) as fh:
            side = json.load(fh)
        fgrid = FrequencyGrid.from_descriptor(side["frequency_grid"])
        vals = []
        with open(path) as fh:
            next(fh)
            for line in fh:
                tok = line.strip().split(",")[2]
                try:
                    vals.append(float(tok))
                except ValueError:
                    vals.append(complex(tok))
        return cls(fgrid, np.array(vals), side["calculus"])


def _freq_sidecar(path):
    base, _ = os.path.splitext(path)
    return base + ".freq.json"
