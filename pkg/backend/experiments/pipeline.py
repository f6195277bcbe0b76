"""
Scherk Lab - Experiment Pipeline
Orchestrates admissibility, Scherk construction, flux audit, barrier family
and the half-space sweep for one experiment configuration.
"""

import logging
import math
from pathlib import Path
from typing import Optional

import numpy as np
from scipy.spatial import cKDTree

from backend.config import Config, ExperimentConfig
from backend.exceptions import ScherkLabError
from backend.flux.flux_validator import (
    SOLUTION_TOL,
    FluxAuditFailed,
    FluxReport,
    FluxTheoremValidator,
    flux_compare,
    flux_theorem_audit,
)
from backend.geometry.kernel import DiskPoint
from backend.loaders.mesh_loader import read_field, read_mesh
from backend.loaders.polygon_loader import PolygonSpec, load_polygon_spec
from backend.logging_config import log_banner, log_summary
from backend.meshing.domains import build_exhaustion, default_basepoint, truncation_covers
from backend.meshing.triangulation import MeshParams, build_truncated_polygon
from backend.output.pdf_report import RunSummaryWriter
from backend.output.writer import (
    write_admissibility,
    write_comparison,
    write_continuation,
    write_convergence,
    write_field,
    write_flux_report,
    write_key_values,
    write_level_table,
    write_mesh,
)
from backend.polygons.admissibility import BALANCE_TOL, AdmissibilityReport, Verdict, check_admissible
from backend.polygons.ideal_polygon import IdealPolygon, TruncationScheme, intrinsic_balance
from backend.solvers.barrier import BarrierFamily, barrier_family, interpolate_field
from backend.solvers.dirichlet import SolverOptions
from backend.solvers.field import ScalarField
from backend.solvers.scherk import NotAdmissible, ScherkSolver, core_vertices
from .halfspace import (
    ASYMPTOTIC_FOOTER,
    AsymptoticTable,
    SweepResult,
    asymptotic_table,
    cylinder_check,
    touch_experiment,
    translated_member,
)

logger = logging.getLogger(__name__)

SYMMETRY_MATCH_TOL = 1e-9


class MissingInput(ScherkLabError):
    """Raised when a subcommand needs files an earlier subcommand writes."""
    pass


def _level_name(level: float) -> str:
    return f"{level:g}"


def odd_symmetry_defect(field: ScalarField, poly: IdealPolygon) -> Optional[float]:
    """
    max |u(Rz) + u(z)| over vertex pairs related by the rotation R taking each
    ideal vertex to the next one. None when the polygon or mesh is not symmetric.
    """
    n = poly.n_vertices
    thetas = np.array([v.theta for v in poly.vertices])
    step = 2.0 * math.pi / n
    if np.max(np.abs(np.diff(thetas) - step)) > 1e-12:
        return None
    z = field.mesh.z
    rotated = z * complex(math.cos(step), math.sin(step))
    tree = cKDTree(field.mesh.xy)
    dist, idx = tree.query(np.column_stack([rotated.real, rotated.imag]))
    matched = dist < SYMMETRY_MATCH_TOL
    if not np.all(matched):
        logger.info(f"Mesh is not rotation-symmetric ({int((~matched).sum())} unmatched vertices)")
        return None
    return float(np.max(np.abs(field.values[idx] + field.values)))


class ScherkLab:
    """Main orchestrator for the experiment subcommands."""

    def __init__(self, cfg: ExperimentConfig, max_workers: Optional[int] = None):
        self.cfg = cfg
        self.out = Path(cfg.output_dir)
        self.max_workers = max_workers if max_workers is not None else Config.max_workers()
        self.opts = SolverOptions.from_dict(cfg.solver)
        self.params = MeshParams.from_dict(cfg.mesh)
        self._spec: Optional[PolygonSpec] = None
        self.stats = {
            "levels_solved": 0,
            "newton_iterations": 0,
            "arcs_audited": 0,
            "barrier_members": 0,
            "files_written": 0,
        }
        self.summary_rows: list[tuple[str, object]] = []

    @property
    def spec(self) -> PolygonSpec:
        if self._spec is None:
            self._spec = load_polygon_spec(self.cfg.polygon_spec)
        return self._spec

    @property
    def poly(self) -> IdealPolygon:
        return self.spec.polygon

    @property
    def scale(self) -> float:
        """Length multiplier 1/a for curvature -a^2."""
        a = self.cfg.curvature_scale if self.cfg.curvature_scale is not None else self.spec.curvature
        return 1.0 / a

    @property
    def basepoint(self) -> DiskPoint:
        if self.cfg.basepoint is not None:
            return DiskPoint(*self.cfg.basepoint)
        return default_basepoint(self.poly)

    def mesh_path(self, level: float) -> Path:
        return self.out / f"mesh_L{_level_name(level)}.txt"

    def field_path(self, level: float) -> Path:
        return self.out / f"field_L{_level_name(level)}.txt"

    def _wrote(self, path: Path) -> Path:
        self.stats["files_written"] += 1
        logger.info(f"Wrote {path}")
        return path

    def _banner(self, title: str):
        log_banner(logger, title, f"Polygon spec: {self.cfg.polygon_spec}")

    def _finish(self, command: str):
        self._print_summary(command)
        if self.cfg.pdf_summary:
            writer = RunSummaryWriter(self.out / f"summary_{command}.pdf", f"Scherk Lab: {command}")
            writer.add_key_values("Configuration", sorted(
                (k, v) for k, v in self.cfg.to_dict().items()
                if not isinstance(v, dict) and k != "output_dir"
            ))
            writer.add_key_values("Results", self.summary_rows)
            writer.add_key_values("Run statistics", sorted(self.stats.items()))
            self._wrote(writer.write())

    def _print_summary(self, command: str):
        log_summary(logger, f"{command.upper()} SUMMARY", [*self.summary_rows, *self.stats.items()])

    # ------------------------------------------------------------------ admissible

    def cmd_admissible(self) -> AdmissibilityReport:
        """Certify admissibility and write admissibility.txt; the verdict drives the exit code."""
        self._banner("Admissibility audit")
        logger.info(f"Step 1: Loading polygon ({self.poly.n_vertices} vertices)")
        logger.info(f"Step 2: Auditing over levels {self.cfg.admissibility_grid}")
        report = check_admissible(self.poly, self.cfg.admissibility_grid, self.max_workers)
        logger.info(f"Balance a(Gamma) - b(Gamma) = {self.scale * report.balance:.3e}")
        for reason in report.reasons:
            logger.info(f"  {reason}")
        self._wrote(write_admissibility(report, self.out / "admissibility.txt"))
        self.summary_rows = [
            ("verdict", report.verdict.value),
            ("balance", self.scale * report.balance),
            ("inscribed polygons", len(report.inscribed)),
        ]
        self._finish("admissible")
        return report

    # ------------------------------------------------------------------ solve

    def _certify(self) -> AdmissibilityReport:
        report = check_admissible(self.poly, self.cfg.admissibility_grid, self.max_workers)
        if report.verdict != Verdict.ADMISSIBLE:
            logger.error(f"Refusing to solve: polygon is {report.verdict.value}")
            raise NotAdmissible(report)
        return report

    def _solve_level(self, level: float) -> tuple[ScalarField, ScherkSolver]:
        trunc = TruncationScheme.uniform(self.poly, level)
        mesh = build_truncated_polygon(self.poly, trunc, self.params, self.basepoint)
        solver = ScherkSolver(self.poly, self.opts, self.cfg.admissibility_grid,
                              require_admissible=False, max_workers=self.max_workers)
        field = solver.solve(trunc, self.cfg.L_sequence, mesh=mesh)
        self.stats["levels_solved"] += 1
        self.stats["newton_iterations"] += solver.stats["iterations"]
        return field, solver

    def cmd_solve(self) -> dict[float, ScalarField]:
        """
        Solve the Scherk continuation at every truncation level and write the
        mesh, field and continuation table of each.

        Raises:
            NotAdmissible: If the polygon is not certified admissible
            NonConvergence: If a Dirichlet solve fails
            NotStabilized: If a continuation does not settle
        """
        self._banner("Scherk construction")
        logger.info("Step 1: Certifying admissibility")
        self._certify()

        fields: dict[float, ScalarField] = {}
        previous: Optional[tuple[ScalarField, np.ndarray]] = None
        for step, level in enumerate(self.cfg.truncation_levels, start=2):
            logger.info(f"Step {step}: Solving at truncation level {level:g}")
            try:
                field, solver = self._solve_level(level)
            except ScherkLabError:
                raise
            except Exception as e:
                logger.error(f"Solve at level {level:g} failed: {e}", exc_info=True)
                raise RuntimeError(f"Solve at truncation level {level:g} failed") from e

            self._wrote(write_mesh(field.mesh, self.mesh_path(level)))
            self._wrote(write_field(field, self.field_path(level)))
            self._wrote(write_continuation(solver.continuation, self.out / f"continuation_L{_level_name(level)}.txt"))

            defect = odd_symmetry_defect(field, self.poly)
            if defect is not None:
                logger.info(f"Odd symmetry at level {level:g}: max |u(Rz) + u(z)| = {defect:.3e}")
                self.summary_rows.append((f"odd symmetry L{_level_name(level)}", defect))
            if previous is not None:
                prev_field, prev_core = previous
                change = float(np.max(np.abs(
                    interpolate_field(field, prev_field.mesh.z[prev_core]) - prev_field.values[prev_core]
                ))) if len(prev_core) else 0.0
                logger.info(f"Interior change from the previous level: {change:.6e}")
                self.summary_rows.append((f"interior change L{_level_name(level)}", change))
            previous = (field, solver.core)
            fields[level] = field

        self._finish("solve")
        return fields

    # ------------------------------------------------------------------ flux

    def _load_solution(self, field_path: Path) -> ScalarField:
        name = field_path.name
        if not name.startswith("field_"):
            raise MissingInput(f"field file name must start with 'field_': {field_path}")
        mesh_path = field_path.with_name("mesh_" + name[len("field_"):])
        if not field_path.is_file() or not mesh_path.is_file():
            raise MissingInput(f"solve outputs not found: {field_path} / {mesh_path} (run 'solve' first)")
        mesh = read_mesh(mesh_path)
        return read_field(field_path, mesh)

    def _deepest_field_path(self) -> Path:
        return self.field_path(min(self.cfg.truncation_levels))

    def cmd_flux(self, field_path: "str | Path | None" = None) -> FluxReport:
        """
        Audit the flux identities of a solve output and tabulate sum |c| and
        the smallest alpha ratio over the truncation levels.

        Raises:
            MissingInput: If the field or its mesh is missing
            MeshFormatError: If the field does not match its mesh
            FluxAuditFailed: If an identity, bound or ratio fails, or a depth trend breaks
        """
        self._banner("Flux audit")
        field_path = Path(field_path) if field_path is not None else self._deepest_field_path()
        logger.info(f"Step 1: Loading {field_path}")
        field = self._load_solution(field_path)

        logger.info("Step 2: Auditing arcs and cycles")
        audit = self.cfg.audit
        report = flux_theorem_audit(field, scale=self.scale)
        ratio_applies = report.level is not None and report.level <= audit["ratio_level"]
        balanced = abs(intrinsic_balance(self.poly)) <= BALANCE_TOL
        validator = FluxTheoremValidator(
            cycle_tol=max(1e-8, self.opts.residual_tol * field.mesh.n_vertices),
            min_ratio=audit["min_ratio"] if ratio_applies else None,
            balance_tol=BALANCE_TOL * max(1.0, report.sum_alpha) if balanced else None,
        )
        self.stats["arcs_audited"] += len(report.arcs)
        ok, problems = validator.validate(report)
        self._wrote(write_flux_report(report, self.out / f"flux_{field_path.stem[len('field_'):]}.txt"))

        logger.info("Step 3: Tabulating the truncation levels")
        levels, level_reports = [], []
        for level in self.cfg.truncation_levels:
            path = self.field_path(level)
            if not path.is_file():
                logger.warning(f"No solve output for level {level:g}; skipped in the level table")
                continue
            levels.append(level)
            level_reports.append(
                report if path.resolve() == field_path.resolve() else
                flux_theorem_audit(self._load_solution(path), scale=self.scale)
            )
        rows = [
            (level, r.sum_c, r.bound, r.total, r.ratio_extremes()["alpha_min"])
            for level, r in zip(levels, level_reports)
        ]
        self._wrote(write_level_table(rows, self.out / "flux_levels.txt"))
        problems.extend(validator.validate_levels(level_reports, ratio_trend=audit["ratio_trend"])[1])

        extremes = report.ratio_extremes()
        self.summary_rows = [
            ("field", field_path.name),
            ("sum alpha - sum beta", report.sum_alpha - report.sum_beta),
            ("sum |c|", report.sum_c),
            ("bound", report.bound),
            ("total", report.total),
            ("max cycle flux", report.max_cycle()),
            ("alpha ratio min", extremes["alpha_min"]),
            ("beta ratio max", extremes["beta_max"]),
            ("ratio floor", validator.min_ratio),
        ]
        self._finish("flux")
        if problems:
            raise FluxAuditFailed(problems)
        return report

    # ------------------------------------------------------------------ barrier

    def _barrier_source(self) -> ScalarField:
        """Deepest solve output if it covers D_N, else a fresh solve at level -(N + 1)."""
        n_max = max(self.cfg.n_list)
        domain = build_exhaustion(self.poly, self.basepoint, n_max)
        path = self._deepest_field_path()
        if path.is_file():
            field = self._load_solution(path)
            levels = field.mesh.metadata.get("levels")
            if levels is not None:
                trunc = TruncationScheme(tuple(float(s) for s in levels.split(",")))
                if truncation_covers(self.poly, trunc, domain):
                    logger.info(f"Using {path} as the barrier source")
                    return field
            logger.info(f"{path} does not cover D_{n_max:g}")
        level = -(n_max + 1.0)
        logger.info(f"Solving a barrier source at truncation level {level:g}")
        self._certify()
        field, _ = self._solve_level(level)
        return field

    def _family(self) -> BarrierFamily:
        source = self._barrier_source()
        return barrier_family(
            self.poly, source, self.cfg.t, self.cfg.n_list, self.opts, self.params,
            t_max=self.cfg.t_max, max_workers=self.max_workers, basepoint=self.basepoint,
            halving_ratio=self.cfg.audit["halving_ratio"],
        )

    def cmd_barrier(self) -> BarrierFamily:
        """
        Compute the barrier family, its convergence table and one flux
        comparison witness per member against the reference.

        Raises:
            SandwichViolated: If a member leaves [u, u + t]
            TrendViolated: If the convergence column increases
            NotHalved: If the column does not shrink below halving_ratio of its first value
        """
        self._banner(f"Barrier family t={self.cfg.t:g}, n={self.cfg.n_list}")
        logger.info("Step 1: Preparing the reference")
        logger.info("Step 2: Solving the annulus members")
        family = self._family()
        self.stats["barrier_members"] += len(family.members)

        logger.info("Step 3: Writing members and the convergence table")
        ref = family.reference
        self._wrote(write_mesh(ref.mesh, self.out / "mesh_annulus.txt"))
        self._wrote(write_field(ref, self.out / "field_annulus.txt"))
        compare_tol = max(SOLUTION_TOL, self.opts.sandwich_tol)
        for (n, _), member in sorted(family.members.items()):
            self._wrote(write_mesh(member.mesh, self.out / f"mesh_barrier_n{n:g}.txt"))
            self._wrote(write_field(member, self.out / f"barrier_n{n:g}.txt"))
            witness = flux_compare(ref.restrict(member.mesh), member, [f"gamma{n:g}"], tol=compare_tol)
            self._wrote(write_comparison(witness, self.out / f"comparison_n{n:g}.txt"))
        self._wrote(write_convergence(family.convergence, self.out / "convergence.txt"))

        self.summary_rows = [(f"sup_A{self.cfg.n_list[0]:g}(u_n - u) n={n:g}", v) for n, v in family.convergence]
        self.summary_rows.append(("halved", family.halved))
        self._finish("barrier")
        family.require_halved()
        return family

    # ------------------------------------------------------------------ halfspace

    def _p0(self, fallback: complex) -> complex:
        p0 = self.cfg.halfspace["p0"]
        return complex(p0[0], p0[1]) if p0 is not None else fallback

    def cmd_halfspace(self, mode: Optional[str] = None) -> "SweepResult | AsymptoticTable":
        """
        Run the translation-sweep experiment.

        mode 'touch' sweeps the deepest solve against its translate u - c;
        mode 'asymptotic' recomputes the barrier family and tabulates the
        translated members u_{n,t} - t against u.

        Raises:
            MissingInput: If mode 'touch' finds no solve output
            ValueError: For an unknown mode
        """
        hs = self.cfg.halfspace
        mode = mode or hs["mode"]
        self._banner(f"Half-space sweep ({mode})")
        tol = 10.0 * self.opts.residual_tol
        r0 = float(hs["r0"])

        if mode == "touch":
            logger.info("Step 1: Loading the deepest solve")
            sigma = self._load_solution(self._deepest_field_path())
            c = float(hs["c"])
            logger.info(f"Step 2: Sweeping against u - {c:g}")
            result = touch_experiment(sigma, c, hs["step"], hs["max_offset"], tol)
            logger.info("Step 3: Cylinder check")
            check = cylinder_check(sigma, sigma.shifted(-c), self._p0(self.basepoint.z), r0)
            items = [("mode", mode), ("c", c)]
            items.extend(_flatten("sweep", result.to_dict()))
            items.extend(_flatten("cylinder", check.to_dict()))
            self._wrote(write_key_values(items, self.out / "halfspace_touch.txt"))
            self.summary_rows = [("contact", result.contact_type.value), ("offset", result.contact_offset),
                                 ("cylinder avoided", check.avoids)]
            self._finish("halfspace")
            return result

        if mode == "asymptotic":
            logger.info("Step 1: Computing the barrier family")
            family = self._family()
            self.stats["barrier_members"] += len(family.members)
            logger.info("Step 2: Tabulating gaps")
            table = asymptotic_table(family)
            logger.info("Step 3: Cylinder check against the outermost translated member")
            n_max = max(n for n, _ in family.members)
            member = translated_member(family, n_max)
            lifted = np.array(family.reference.values)
            lifted[member.mesh.parent_vertices] = member.values
            surface = ScalarField(family.reference.mesh, lifted)
            check = cylinder_check(family.reference, surface, self._p0(self.basepoint.z), r0)

            items = [("mode", mode), ("t", table.t), ("n0", table.n0)]
            items.extend((f"gap_n{row.n:g}", row.gap) for row in table.rows)
            items.extend((f"clearance_n{row.n:g}", row.clearance) for row in table.rows)
            items.extend([("gaps_positive", table.gaps_positive), ("gaps_decreasing", table.gaps_decreasing),
                          ("below", table.below)])
            items.extend(_flatten("cylinder", check.to_dict()))
            self._wrote(write_key_values(items, self.out / "halfspace_asymptotic.txt", footer=ASYMPTOTIC_FOOTER))
            self.summary_rows = [(f"gap n={row.n:g}", row.gap) for row in table.rows]
            self.summary_rows.append(("cylinder avoided", check.avoids))
            self._finish("halfspace")
            return table

        raise ValueError(f"unknown half-space mode {mode!r}")


def _flatten(prefix: str, data: dict) -> list[tuple[str, object]]:
    items = []
    for key in sorted(data):
        value = data[key]
        if isinstance(value, dict):
            items.extend(_flatten(f"{prefix}.{key}", value))
        else:
            items.append((f"{prefix}.{key}", value))
    return items
