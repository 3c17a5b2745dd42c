"""Incompressible two-phase waterflood on a 2-D Cartesian grid (IMPES).

Per report step the pressure equation is solved once with total mobilities
frozen at the current saturations; the saturation is then advanced by an
explicit upwind scheme in as many equal sub-steps as the CFL limit needs.
Producer phase split follows the fractional flow of the well cell.

Rate-controlled systems without any pressure-controlled well are singular;
one cell is pinned to the initial pressure. For such systems injector and
producer totals are first brought to the smaller of the two (each side
scaled proportionally), since an incompressible reservoir cannot produce
more or less than it is injected.
"""

from __future__ import annotations

from dataclasses import dataclass

import numba
import numpy as np
import scipy.linalg

from ..errors import SolverError
from .case import DARCY, VOLUME, ReservoirCase, WellControl, WellLayout

PRESSURE_RTOL = 1e-8


@dataclass
class SimulationResult:
    """Per-step surface rates (rate volume units per day) and run statistics."""

    oil: np.ndarray
    water: np.ndarray
    injection: np.ndarray
    well_oil: np.ndarray  # (k, n_prod)
    well_water: np.ndarray  # (k, n_prod)
    well_injection: np.ndarray  # (k, n_inj)
    substeps: np.ndarray
    balance_error: np.ndarray
    saturation: np.ndarray
    pressure: np.ndarray
    sw_min: float
    sw_max: float
    overshoot: float  # largest correction made by the round-off clip

    @property
    def n_steps(self) -> int:
        return len(self.oil)


@numba.njit(cache=True, inline="always")
def _power(x, n):
    if n == 2.0:
        return x * x
    if n == 3.0:
        return x * x * x
    if n == 4.0:
        y = x * x
        return y * y
    if n == 1.0:
        return x
    return x**n


@numba.njit(cache=True)
def _transport(S, qx, qy, nx, dt_pv, inj_w, prod_q, n_sub, fl, fsum):
    """Advance ``S`` in place by ``n_sub`` explicit upwind sub-steps.

    ``qx[c]`` is the total flux from cell ``c`` to ``c + 1`` and ``qy[c]``
    from ``c`` to ``c + nx`` (zero on boundary and inactive faces).
    ``dt_pv`` is the sub-step length over pore volume; it is 0 on inactive
    cells, which must hold a saturation inside [swc, 1 - sor].
    ``fl`` packs (swc, sor, mu_w, mu_o, n_w, n_o, krw_max, kro_max).
    ``fsum`` accumulates the fractional flow per cell over sub-steps.
    Returns (min S, max S, largest clip correction) over the start and end
    states; in between every sub-step is clipped into [swc, 1 - sor].
    """
    swc, sor, mu_w, mu_o, n_w, n_o, krw, kro = fl[0], fl[1], fl[2], fl[3], fl[4], fl[5], fl[6], fl[7]
    lo = swc
    hi = 1.0 - sor
    inv_span = 1.0 / (hi - lo)
    cw = krw / mu_w
    co = kro / mu_o
    N = S.size
    # padded so that neighbours past the last row/column read zeros
    f = np.zeros(N + nx)
    wx = np.zeros(N + 1)  # wx[c + 1]: water flux c -> c + 1
    wy = np.zeros(N + nx)  # wy[c + nx]: water flux c -> c + nx
    s_min = S.min()
    s_max = S.max()
    clip = 0.0
    for _ in range(n_sub):
        for c in range(N):
            se = min(max((S[c] - lo) * inv_span, 0.0), 1.0)
            lw = cw * _power(se, n_w)
            lo_ = co * _power(1.0 - se, n_o)
            f[c] = lw / (lw + lo_)
        for c in range(N):
            q = qx[c]
            wx[c + 1] = max(q, 0.0) * f[c] + min(q, 0.0) * f[c + 1]
        for c in range(N):
            q = qy[c]
            wy[c + nx] = max(q, 0.0) * f[c] + min(q, 0.0) * f[c + nx]
        out = 0
        for c in range(N):
            fsum[c] += f[c]
            s = S[c] + dt_pv[c] * (inj_w[c] - prod_q[c] * f[c] + wx[c] - wx[c + 1] + wy[c] - wy[c + nx])
            out |= (s < lo) | (s > hi)
            S[c] = s
        if out:
            # round-off overshoot; a monotone step never leaves the range
            for c in range(N):
                s = S[c]
                if s < lo or s > hi:
                    clip = max(clip, lo - s, s - hi)
                    S[c] = min(max(s, lo), hi)
    return min(s_min, S.min()), max(s_max, S.max()), clip


class Simulator:
    """Precomputed grid geometry for repeated simulations of one case."""

    def __init__(self, case: ReservoirCase):
        self.case = case
        nx, ny = case.nx, case.ny
        self.N = nx * ny
        active = case.active.ravel()
        self.active = active
        perm = np.where(case.active, case.perm, 0.0).ravel()
        cell = np.arange(self.N).reshape(ny, nx)
        ax, bx = cell[:, :-1].ravel(), cell[:, 1:].ravel()
        ay, by = cell[:-1, :].ravel(), cell[1:, :].ravel()
        c = DARCY[case.units]

        def harmonic(a, b):
            ka, kb = perm[a], perm[b]
            with np.errstate(invalid="ignore", divide="ignore"):
                h = np.where((ka > 0) & (kb > 0), 2 * ka * kb / (ka + kb), 0.0)
            return h

        tx = c * harmonic(ax, bx) * case.dy * case.dz / case.dx
        ty = c * harmonic(ay, by) * case.dx * case.dz / case.dy
        keep_x, keep_y = tx > 0, ty > 0
        self.fa = np.concatenate([ax[keep_x], ay[keep_y]])
        self.fb = np.concatenate([bx[keep_x], by[keep_y]])
        self.trans = np.concatenate([tx[keep_x], ty[keep_y]])
        self.is_x = np.concatenate([np.ones(keep_x.sum(), bool), np.zeros(keep_y.sum(), bool)])
        self.pv = np.where(active, case.dx * case.dy * case.dz * case.porosity * VOLUME[case.units], 0.0)
        # Peaceman equivalent radius, isotropic permeability
        r0 = 0.14 * np.hypot(case.dx, case.dy)
        self.well_index = c * 2 * np.pi * perm * case.dz / np.log(r0 / case.well_radius)
        self.anchor = int(np.flatnonzero(active)[0])
        self.dfds_max = case.fluid.max_dfds()
        fl = case.fluid
        self._fluid_pack = np.array(
            [fl.swc, fl.sor, fl.mu_w, fl.mu_o, fl.n_w, fl.n_o, fl.krw_max, fl.kro_max], dtype=float
        )

    def _solve_pressure(self, lam_t, q_rate, bhp_cells, bhp_values):
        # Solved for the deviation from the initial pressure, so a flow
        # field at rest comes out exactly at rest.
        case = self.case
        N, nx = self.N, case.nx
        p0 = case.p_init
        tl = self.trans * 0.5 * (lam_t[self.fa] + lam_t[self.fb])
        diag = np.bincount(self.fa, tl, N) + np.bincount(self.fb, tl, N)
        rhs = q_rate.copy()
        J = self.well_index[bhp_cells] * lam_t[bhp_cells]
        diag += np.bincount(bhp_cells, J, N)
        rhs += np.bincount(bhp_cells, J * (bhp_values - p0), N)
        full_diag, full_rhs = diag.copy(), rhs.copy()

        off = tl.copy()
        if len(bhp_cells) == 0:
            # anchor one cell at the initial pressure
            a = self.anchor
            off[(self.fa == a) | (self.fb == a)] = 0.0
            diag[a], rhs[a] = 1.0, 0.0
        inactive = ~self.active
        diag[inactive] = 1.0
        rhs[inactive] = 0.0

        ab = np.zeros((nx + 1, N))
        ab[0] = diag
        ab[1, self.fa[self.is_x]] = -off[self.is_x]
        ab[nx, self.fa[~self.is_x]] = -off[~self.is_x]
        try:
            u = scipy.linalg.solveh_banded(ab, rhs, lower=True, check_finite=False)
        except (np.linalg.LinAlgError, ValueError) as exc:
            raise SolverError(f"pressure factorization failed: {exc}") from exc

        flux = tl * (u[self.fa] - u[self.fb])
        resid = full_diag * u - full_rhs
        resid -= np.bincount(self.fa, tl * u[self.fb], N) + np.bincount(self.fb, tl * u[self.fa], N)
        resid[inactive] = 0.0
        scale = np.linalg.norm(full_rhs[self.active]) + np.linalg.norm(full_diag * u)
        rel = np.linalg.norm(resid) / scale if scale > 0 else 0.0
        if not np.isfinite(rel) or rel > PRESSURE_RTOL:
            raise SolverError(f"pressure solve relative residual {rel:.3e} exceeds {PRESSURE_RTOL}")
        p = u + p0
        return p, flux

    def run(self, layout: WellLayout) -> SimulationResult:
        case = self.case
        N, k = self.N, case.n_steps
        inj_cells = np.asarray(layout.injectors[:, 0] * case.nx + layout.injectors[:, 1], dtype=int)
        prod_cells = np.asarray(layout.producers[:, 0] * case.nx + layout.producers[:, 1], dtype=int)
        if not (self.active[inj_cells].all() and self.active[prod_cells].all()):
            raise SolverError("well placed on an inactive cell")
        bhp = case.producer_control is WellControl.BHP

        S = np.full(N, float(case.sw_init))
        out = {name: np.zeros(k) for name in ("oil", "water", "injection", "substeps", "balance")}
        well_oil = np.zeros((k, case.n_prod))
        well_water = np.zeros((k, case.n_prod))
        well_inj = np.zeros((k, case.n_inj))
        s_min, s_max, overshoot = case.sw_init, case.sw_init, 0.0
        p = np.full(N, case.p_init)
        dt_step = case.dt_days

        for t in range(k):
            q_inj = np.maximum(np.asarray(layout.inj_rates[:, t], dtype=float), 0.0)
            if bhp:
                q_prod_set = None
                bhp_vals = np.asarray(layout.prod_controls[:, t], dtype=float)
            else:
                q_prod_set = np.maximum(np.asarray(layout.prod_controls[:, t], dtype=float), 0.0)
                total_i, total_p = q_inj.sum(), q_prod_set.sum()
                common = min(total_i, total_p)
                q_inj = q_inj * (common / total_i) if total_i > 0 else q_inj * 0.0
                q_prod_set = q_prod_set * (common / total_p) if total_p > 0 else q_prod_set * 0.0

            lw, lo = case.fluid.mobilities(S)
            lam_t = np.where(self.active, lw + lo, 0.0)
            q_rate = np.bincount(inj_cells, q_inj, N)
            if bhp:
                p, flux = self._solve_pressure(lam_t, q_rate, prod_cells, bhp_vals)
                q_prod = self.well_index[prod_cells] * lam_t[prod_cells] * (p[prod_cells] - bhp_vals)
            else:
                q_rate -= np.bincount(prod_cells, q_prod_set, N)
                p, flux = self._solve_pressure(lam_t, q_rate, prod_cells[:0], np.zeros(0))
                q_prod = q_prod_set
            inj_w = np.bincount(inj_cells, q_inj, N)
            prod_q = np.bincount(prod_cells, q_prod, N)

            outflow = np.bincount(self.fa, np.maximum(flux, 0.0), N) + np.bincount(
                self.fb, np.maximum(-flux, 0.0), N
            )
            outflow += np.maximum(prod_q, 0.0)
            busy = (outflow > 0) & self.active
            if busy.any():
                dt_cfl = case.cfl * np.min(self.pv[busy] / (self.dfds_max * outflow[busy]))
                n_sub = max(1, int(np.ceil(dt_step / dt_cfl)))
            else:
                n_sub = 1
            if n_sub > case.max_substeps:
                raise SolverError(f"step {t} needs {n_sub} saturation sub-steps (cap {case.max_substeps})")

            fsum = np.zeros(N)
            qx = np.zeros(N)
            qy = np.zeros(N)
            qx[self.fa[self.is_x]] = flux[self.is_x]
            qy[self.fa[~self.is_x]] = flux[~self.is_x]
            dt_pv = np.divide(dt_step / n_sub, self.pv, out=np.zeros(N), where=self.pv > 0)
            lo_s, hi_s, clip = _transport(
                S, qx, qy, case.nx, dt_pv, inj_w, prod_q, n_sub, self._fluid_pack, fsum
            )
            s_min, s_max, overshoot = min(s_min, lo_s), max(s_max, hi_s), max(overshoot, clip)
            f_avg = fsum / n_sub
            well_water[t] = q_prod * f_avg[prod_cells]
            well_oil[t] = q_prod * (1.0 - f_avg[prod_cells])
            well_inj[t] = q_inj
            out["oil"][t] = well_oil[t].sum()
            out["water"][t] = well_water[t].sum()
            out["injection"][t] = q_inj.sum()
            out["substeps"][t] = n_sub
            produced = out["oil"][t] + out["water"][t]
            denom = max(out["injection"][t], produced)
            out["balance"][t] = abs(out["injection"][t] - produced) / denom if denom > 0 else 0.0

        shape = (case.ny, case.nx)
        return SimulationResult(
            oil=out["oil"],
            water=out["water"],
            injection=out["injection"],
            well_oil=well_oil,
            well_water=well_water,
            well_injection=well_inj,
            substeps=out["substeps"].astype(int),
            balance_error=out["balance"],
            saturation=np.where(case.active, S.reshape(shape), np.nan),
            pressure=np.where(case.active, p.reshape(shape), np.nan),
            sw_min=float(s_min),
            sw_max=float(s_max),
            overshoot=float(overshoot),
        )


def simulate(case: ReservoirCase, layout: WellLayout) -> SimulationResult:
    """Run the waterflood for ``layout`` over the case schedule."""
    return Simulator(case).run(layout)


def write_rates_csv(result: SimulationResult, path) -> None:
    """Export per-well rates as ``step, well, phase, rate`` rows."""
    import csv

    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["step", "well", "phase", "rate"])
        for t in range(result.n_steps):
            for j, q in enumerate(result.well_injection[t]):
                w.writerow([t + 1, f"INJ{j + 1}", "water_injection", repr(float(q))])
            for j in range(result.well_oil.shape[1]):
                w.writerow([t + 1, f"PROD{j + 1}", "oil", repr(float(result.well_oil[t, j]))])
                w.writerow([t + 1, f"PROD{j + 1}", "water", repr(float(result.well_water[t, j]))])
