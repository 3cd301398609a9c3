"""Acceptance criteria, one test and one summary line each.

Every check is a (measured, tolerance, ok) triple; the summary line lists
the failing ones. The tolerances below are the contract and must not be
relaxed to make a check pass.
"""

import json
import math
import subprocess
import sys
from dataclasses import dataclass, field

import numpy as np
import pytest

from conftest import ROOT, SPECS, W, nabla_h_fd, random_directions, strict_specs
from minkowski_affine.affine_volumes import check_theorems, sigma_F
from minkowski_affine.blaschke import blaschke_structure
from minkowski_affine.indicatrix import centro_affine_connection, chart_geometry, sphere_grid
from minkowski_affine.navigation import randers_closed_form, randers_identities, solve_many
from minkowski_affine.norm_core import cartan_form_is_dtau, evaluate_many, tensors_many
from minkowski_affine.section_darboux import DEFAULT_SECTION, SectionSpec, induced_norm, theorem33_sweep
from minkowski_affine.specs import AlphaBetaNorm, EuclideanNorm, PhiSpec, RandersNorm, load

pytestmark = pytest.mark.acceptance

FOUR_PI = 4 * math.pi
N_POINTS = 100


@dataclass
class Criterion:
    number: int
    title: str
    checks: list = field(default_factory=list)
    notes: list = field(default_factory=list)

    def upper(self, name, value, tol):
        """value <= tol"""
        value = float(value)
        self.checks.append((name, value, tol, value <= tol, "<="))

    def lower(self, name, value, bound):
        """value >= bound (or > bound when strict)"""
        value = float(value)
        self.checks.append((name, value, bound, value >= bound, ">="))

    def positive(self, name, value):
        value = float(value)
        self.checks.append((name, value, 0.0, value > 0, ">"))

    def note(self, text):
        self.notes.append(text)

    @property
    def ok(self):
        return all(c[3] for c in self.checks)

    def line(self):
        status = "PASS" if self.ok else "FAIL"
        bad = [f"{n}={v:.3e} (need {op} {t:g})" for n, v, t, ok, op in self.checks if not ok]
        tail = f"failed: {'; '.join(bad)}" if bad else f"{len(self.checks)} checks"
        if self.notes:
            tail += " | " + "; ".join(self.notes)
        return f"[{self.number}] {status} {self.title}: {tail}"

    def finish(self, log):
        log.append(self.line())
        print(self.line())
        for n, v, t, ok, op in self.checks:
            print(f"    {'ok ' if ok else 'BAD'} {n}: {v:.6e} {op} {t:g}")
        assert self.ok, self.line()


def rel(a, b):
    a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    return float(np.max(np.abs(a - b) / np.abs(b)))


def suite_specs():
    return {
        "euclid": EuclideanNorm(np.eye(3)),
        "randers": load(SPECS / "randers3.json"),
        "general_ab": load(SPECS / "general_ab3.json"),
        "sheared": load(SPECS / "sheared3.json"),
        **{f"strict{i}": s for i, s in enumerate(strict_specs())},
    }


@pytest.fixture(scope="module")
def grid():
    return sphere_grid(3)


@pytest.fixture(scope="module")
def points():
    return random_directions(np.random.default_rng(20260514), N_POINTS)


def test_euclidean_suite(acceptance_log, grid):
    crit = Criterion(1, "Euclidean norm")
    spec = EuclideanNorm(np.eye(3))
    T = tensors_many(spec, grid.nodes, sigma_F=sigma_F(spec, grid))
    for name in ("A", "I", "M", "tau"):
        crit.upper(f"max|{name}|", np.abs(getattr(T, name)).max(), 1e-10)
    b = blaschke_structure(spec, grid.nodes, sigma_F=sigma_F(spec, grid))
    crit.upper("max|lambda-1|", np.abs(b.lam - 1).max(), 1e-6)
    crit.upper("max|L-1|", np.abs(b.L - 1).max(), 1e-6)
    crit.upper("max|K-1|", np.abs(b.chart.K - 1).max(), 1e-8)
    rep = check_theorems(spec, grid)
    crit.upper("S rel err", abs(rep.S_affine / FOUR_PI - 1), 1e-6)
    crit.upper("V_k rel err", rel(rep.V, np.full(4, FOUR_PI / 3)), 1e-6)
    crit.finish(acceptance_log)


def test_randers_suite(acceptance_log, grid, points):
    crit = Criterion(2, "Randers navigation norm (G=I, W=(0,0,0.5))")
    spec = load(SPECS / "randers3.json")
    G = np.eye(3)
    closed = randers_closed_form(G, W)
    crit.upper("navigation vs closed form", rel(solve_many(spec, points), evaluate_many(closed, points)), 1e-9)

    T = tensors_many(spec, points)
    printed = np.array([randers_identities(G, W, y, convention="printed").det_g for y in points])
    corrected = np.array([randers_identities(G, W, y).det_g for y in points])
    crit.upper("det g vs closed formula", rel(T.det_g, printed), 1e-7)
    pole = tensors_many(spec, np.array([[0.0, 0.0, 1.0]])).det_g[0]
    crit.upper("det g(0,0,1) vs 8", abs(pole / 8 - 1), 1e-7)
    crit.note(f"det g(0,0,1) = {pole:.12g}; exponent dim+1 gives rel err {rel(T.det_g, corrected):.1e}")

    sig = sigma_F(spec, grid)
    crit.upper("|sigma_F-1|", abs(sig - 1), 1e-7)
    b = blaschke_structure(spec, points, sigma_F=sig)
    crit.upper("max|xi+(y+W)|", np.abs(b.xi + b.r + W).max(), 1e-5)
    bg = blaschke_structure(spec, grid.nodes, sigma_F=sig)
    crit.upper("max|L_r-1|", np.abs(bg.L - 1).max(), 1e-4)
    crit.upper("max|M|", np.abs(tensors_many(spec, grid.nodes).M).max(), 1e-8)
    rep = check_theorems(spec, grid)
    crit.upper("S rel err", abs(rep.S_affine / FOUR_PI - 1), 1e-4)
    crit.upper("|thm52 margin|", abs(rep.thm52_margin), 1e-4)
    crit.upper("|thm54 margin|", abs(rep.thm54_margin), 1e-4)
    crit.finish(acceptance_log)


def test_strict_inequality_suite(acceptance_log, grid):
    crit = Criterion(3, "strict inequalities for non-Randers norms")
    specs = strict_specs()
    assert len(specs) == 5
    for i, spec in enumerate(specs):
        rep = check_theorems(spec, grid)
        crit.positive(f"strict{i} thm52 margin", rep.thm52_margin)
        crit.positive(f"strict{i} thm54 margin", rep.thm54_margin)
        crit.lower(f"strict{i} min thm53 margin", min(r["margin"] for r in rep.thm53), -1e-6)
    crit.finish(acceptance_log)


def test_mixed_volume_oracle(acceptance_log, grid):
    crit = Criterion(4, "mixed volumes vs polynomial fit of Vol(Omega_t)")
    for name, spec in suite_specs().items():
        rep = check_theorems(spec, grid)
        crit.upper(f"{name} V rel err", rel(rep.V_polynomial, rep.V), 1e-4)
        crit.upper(f"{name} fit residual", rep.polynomial_residual, 1e-8)
    crit.finish(acceptance_log)


def _xi_fd(spec, U, frames, sig, step=1e-5):
    """Central differences of the affine normal along the chart directions."""
    out = []
    for k in range(frames.shape[2]):
        plus = blaschke_structure(spec, U + step * frames[:, :, k], sigma_F=sig).xi
        minus = blaschke_structure(spec, U - step * frames[:, :, k], sigma_F=sig).xi
        out.append((plus - minus) / (2 * step))
    return np.stack(out, axis=-1)


def test_structural_identities(acceptance_log, points):
    crit = Criterion(5, "structural identities at random points")
    induced_dev = 0.0
    rng = np.random.default_rng(7)
    for name, spec in suite_specs().items():
        c = chart_geometry(spec, points)
        T = tensors_many(spec, c.r)
        er = np.concatenate([c.e, c.r[:, :, None]], axis=2)
        blocks = np.einsum("nai,nab,nbj->nij", er, T.g, er)
        target = np.zeros_like(blocks)
        target[:, :2, :2] = c.h
        target[:, 2, 2] = 1
        crit.upper(f"{name} block identity", np.abs(blocks - target).max(), 1e-8)

        dtau = 0.0
        for k, y in enumerate(c.r):
            v = np.cross(T.ell[k], rng.normal(size=3))
            a, bb = cartan_form_is_dtau(spec, y, v / np.linalg.norm(v))
            dtau = max(dtau, abs(a - bb))
        crit.upper(f"{name} I = dtau", dtau, 1e-6)

        nab = 0.0
        for k, u in enumerate(c.u):
            gamma = centro_affine_connection(spec, u, chart=c.frames[k])
            nab = max(nab, np.abs(nabla_h_fd(spec, u, c.frames[k], gamma) - c.A[k]).max())
            if k < 10:
                induced = centro_affine_connection(spec, u, chart=c.frames[k], convention="induced")
                induced_dev = max(induced_dev, np.abs(nabla_h_fd(spec, u, c.frames[k], induced) - 2 * c.A[k]).max())
        crit.upper(f"{name} nabla h = A", nab, 1e-5)

        sig = sigma_F(spec, 24)
        b = blaschke_structure(spec, c.u, c.frames, sigma_F=sig)
        fd = _xi_fd(spec, c.u, c.frames, sig)
        crit.upper(f"{name} dxi = -s dr", np.abs(fd + np.einsum("nij,naj->nai", b.s, c.e)).max(), 1e-5)

        crit.upper(f"{name} h dual routes", np.abs(c.h - c.h_det).max(), 1e-7)
        crit.upper(f"{name} K dual routes", rel(c.K_det, c.K), 1e-6)
    crit.note(f"induced connection gives nabla h = 2A to {induced_dev:.1e}")
    crit.finish(acceptance_log)


def test_section_suite(acceptance_log):
    crit = Criterion(6, "Darboux section test")
    gab = load(SPECS / "general_ab3.json")
    section = DEFAULT_SECTION  # {beta = 0} for b = e3
    rep = theorem33_sweep(gab, section, n_shifts=5, seed=0)
    crit.upper("general (a,b) max T-deviation", rep["max_dev"], 1e-5)
    crit.upper("general (a,b) max section cubic", rep["max_cubic"], 1e-5)
    sh = theorem33_sweep(load(SPECS / "sheared3.json"), section, n_shifts=5, seed=0)
    crit.lower("sheared max T-deviation", sh["max_dev"], 1e-3)
    crit.lower("sheared max section cubic", sh["max_cubic"], 1e-3)

    rng = np.random.default_rng(11)
    base = AlphaBetaNorm(np.diag([1.0, 1.5, 0.8]), [0.2, -0.3, 0.5], PhiSpec("quadratic", 0.1))
    sec = SectionSpec(np.linalg.qr(rng.normal(size=(3, 2)))[0])
    B = sec.basis
    C = rng.normal(size=(100, 2))
    t2, t3 = tensors_many(induced_norm(base, sec), C), tensors_many(base, C @ B.T)
    crit.upper("g restriction", np.abs(t2.g - np.einsum("nab,ai,bj->nij", t3.g, B, B)).max(), 1e-10)
    crit.upper("h restriction", np.abs(t2.h - np.einsum("nab,ai,bj->nij", t3.h, B, B)).max(), 1e-10)
    crit.upper("A restriction", np.abs(t2.A - np.einsum("nabc,ai,bj,ck->nijk", t3.A, B, B, B)).max(), 1e-10)
    two_d = [RandersNorm(np.eye(2), [0.2, 0.3]),
             AlphaBetaNorm(np.eye(2), [0.0, 0.5], PhiSpec("exponential", 0.2)),
             AlphaBetaNorm(np.diag([1.0, 2.0]), [0.3, 0.1], PhiSpec("quadratic", 0.15))]
    crit.upper("2D Matsumoto", max(np.abs(tensors_many(s, C).M).max() for s in two_d), 1e-8)
    crit.finish(acceptance_log)


def test_grid_convergence(acceptance_log):
    crit = Criterion(7, "resolution doubling")
    for name in ("euclid", "randers"):
        spec = suite_specs()[name]
        a, b = check_theorems(spec, sphere_grid(3, 32)), check_theorems(spec, sphere_grid(3, 64))
        crit.upper(f"{name} S change", abs(b.S_affine / a.S_affine - 1), 1e-6)
        crit.upper(f"{name} V_k change", rel(b.V, a.V), 1e-6)
    crit.finish(acceptance_log)


def test_determinism(acceptance_log, tmp_path):
    crit = Criterion(8, "reproducible reports are byte-identical")
    outputs = []
    for tag in ("a", "b"):
        out = tmp_path / f"{tag}.json"
        proc = subprocess.run(
            [sys.executable, "-m", "minkowski_affine.cli", "report", "--spec", str(SPECS / "general_ab3.json"),
             "--reproducible", "--out", str(out)],
            capture_output=True, cwd=ROOT,
        )
        assert proc.returncode == 0, proc.stderr.decode()
        outputs.append((out.read_bytes(), (tmp_path / f"{tag}_indicatrix.csv").read_bytes()))
    (json_a, csv_a), (json_b, csv_b) = outputs
    crit.upper("JSON reports differ", int(json_a != json_b), 0)
    crit.upper("CSV sidecars differ", int(csv_a != csv_b), 0)
    json.loads(json_a)
    crit.finish(acceptance_log)
