"""Experiment runner: ``shadowlab run <config>`` and ``shadowlab describe <kind>``.

Every library operation is reachable from at least one command (the mapping
lives in COMMAND_OPERATIONS and is enforced by a test).  Identical configs
produce bitwise-identical output files: seeds are explicit, aggregation is
ordered, floats are written with shortest round-trip formatting and no
timestamps are emitted.

Exit codes: 0 success, 2 when a scan's verdict is diverging, 1 on any error.
"""

from __future__ import annotations

import argparse
import os
import sys as _sys

import numpy as np

from . import hyperbolicity, pseudo, shadow, systems
from .config import Config, ConfigSection, parse_config
from .errors import ConfigError, NonhyperbolicMonodromyError, ShadowlabError

OUTPUT_DIR_ENV = "SHADOWLAB_OUTPUT_DIR"

COMMANDS = ("witness", "shadow", "scan", "orbit", "lemma6", "angles", "enumerate", "splice")

# command name -> library operations it exercises (coverage-checked by tests)
COMMAND_OPERATIONS = {
    "witness": (
        pseudo.witness_eigenvalue_one,
        pseudo.witness_jordan,
        pseudo.witness_jordan_general,
        pseudo.witness_rotation,
        pseudo.defect,
    ),
    "shadow": (shadow.find_periodic_shadow, pseudo.defect),
    "scan": (
        shadow.lipschitz_scan,
        shadow.find_periodic_shadow,
        shadow.direct_shadow_lower_bound,
        shadow.closed_form_linear_shadow,
        shadow.theoretical_linear_lipschitz_bound,
        pseudo.perturb_orbit,
        hyperbolicity.enumerate_periodic_points_toral,
    ),
    "orbit": (
        hyperbolicity.analyze_periodic_orbit,
        hyperbolicity.subspace_angle,
        shadow.verify_periodicity_by_expansivity,
        systems.orbit_segment,
        systems.estimate_norm_bound,
        systems.evaluate,
    ),
    "lemma6": (
        pseudo.witness_orbit_pullback,
        hyperbolicity.analyze_periodic_orbit,
        hyperbolicity.expansion_certificate,
        hyperbolicity.verify_growth_bound,
        shadow.find_periodic_shadow,
        pseudo.defect,
    ),
    "angles": (
        hyperbolicity.enumerate_periodic_points_toral,
        hyperbolicity.analyze_periodic_orbit,
        hyperbolicity.subspace_angle,
        hyperbolicity.extract_uniform_constants,
    ),
    "enumerate": (hyperbolicity.enumerate_periodic_points_toral, systems.evaluate),
    "splice": (pseudo.splice_cycle, systems.orbit_segment, pseudo.defect),
}

DESCRIPTIONS = {
    "toral": """\
system kind: toral
  matrix     (required)  integer matrix with |det| = 1, rows separated by ';'
                         example: matrix = 2 1; 1 1
The system is x -> M x (mod 1) on the unit torus, hyperbolic when no
eigenvalue has modulus 1.  Hyperbolic automorphisms are the bounded-ratio
reference family: scans of perturbed orbits stay below the linear ceiling,
periodic points can be enumerated exactly, and expansion certificates hold
uniformly along them.
""",
    "jordan": """\
system kind: jordan
  block      (default real)  real | rotation | none
  l          (default 2)     block size (number of 2-planes for rotation)
  eigenvalue (default 1)     +1 or -1, diagonal of the real block
  theta      (default 0)     rotation angle of the rotation block
  tail       (default empty) diagonal entries with modulus away from 0 and 1
  c          (default 1)     nonlinearity scale; 0 gives the exactly linear map
  a-ball     (default 0.5)   radius of the exactly linear core ball
  box        (default 4*a-ball) halfwidth of the Euclidean bounding box
The map is v -> A v + phi(v) with A = diag(block, tail) fixed at the origin
and phi vanishing on the core ball.  Witness constructions (staircase,
unit-block, rotation) drive the block coordinates so that no fixed shadowing
ratio can hold as d shrinks; 'K' controls how far they climb (peak K d).
""",
    "perturbed-toral": """\
system kind: perturbed-toral
  matrix     (required)   integer matrix with |det| = 1
  amplitude  (default 0.05) size of the smooth sinusoidal perturbation;
                            must stay below the smallest singular value of
                            the matrix so the map remains invertible
The system is x -> M x + amplitude * g(x) (mod 1) with g the coordinatewise
sine field; it exercises the nonlinear solver paths on the torus.
""",
}


def _fmt(x) -> str:
    return repr(float(x))


def _write_text(path: str, text: str) -> None:
    with open(path, "w", newline="\n") as fh:
        fh.write(text)


def _write_rows(path: str, rows: list[list[str]]) -> None:
    _write_text(path, "\n".join(",".join(row) for row in rows) + "\n")


def _table_text(rows: list[list[str]]) -> str:
    widths = [max(len(r[i]) for r in rows) for i in range(len(rows[0]))]
    return "\n".join("  ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip() for r in rows) + "\n"


# ---------------------------------------------------------------------------
# system construction


def _build_system(section: ConfigSection):
    kind = section.take_str("kind", required=True)
    if kind == "toral":
        matrix = section.take_matrix("matrix", required=True)
        toral = systems.toral_automorphism(matrix)
        return kind, toral, toral.system
    if kind == "jordan":
        block = section.take_str("block", default="real")
        if block == "none":
            block = None
        model = systems.jordan_model(
            block=block,
            size=section.take_int("l", default=2),
            eigenvalue=section.take_int("eigenvalue", default=1),
            theta=section.take_float("theta", default=0.0),
            tail=section.take_floats("tail", default=[]),
            c=section.take_float("c", default=1.0),
            a_ball=section.take_float("a-ball", default=0.5),
            halfwidth=section.take_float("box", default=None),
        )
        return kind, model, model.system
    if kind == "perturbed-toral":
        matrix = section.take_matrix("matrix", required=True)
        base = systems.toral_automorphism(matrix)
        sys_ = systems.perturbed_toral(matrix, section.take_float("amplitude", default=0.05))
        return kind, base, sys_
    raise ConfigError(f"unknown system kind {kind!r}", section.path)


def _require_toral(kind, obj, command: str, path: str) -> systems.ToralAutomorphism:
    if kind != "toral":
        raise ConfigError(f"the {command} command needs a toral system", path)
    return obj


def _require_jordan(kind, obj, command: str, path: str) -> systems.JordanModel:
    if kind != "jordan":
        raise ConfigError(f"the {command} command needs a jordan system", path)
    return obj


# ---------------------------------------------------------------------------
# command handlers (each returns (exit_code, summary_text))


def _cmd_witness(ctx) -> tuple[int, str]:
    kind, obj, _ = ctx["system"]
    section = ctx["command"]
    model = _require_jordan(kind, obj, "witness", section.path)
    wtype = section.take_str("type", required=True)
    d = section.take_float("d", required=True)
    k_steps = section.take_int("K", required=True)
    if wtype == "staircase":
        xi, meta = pseudo.witness_eigenvalue_one(model, d, k_steps)
    elif wtype == "jordan":
        xi, meta = pseudo.witness_jordan(model, d, k_steps)
    elif wtype == "jordan-general":
        xi, meta = pseudo.witness_jordan_general(model, d, k_steps)
    elif wtype == "rotation":
        w0 = section.take_floats("w0", default=[1.0, 0.0])
        xi, meta = pseudo.witness_rotation(model, d, k_steps, w0)
    else:
        raise ConfigError(f"unknown witness type {wtype!r}", section.path)
    path = os.path.join(ctx["out_dir"], "witness.csv")
    pseudo.save_pseudotrajectory(xi, path)
    peak = float(np.max(np.linalg.norm(xi.points, axis=1)))
    return 0, (
        f"Constructed a {meta.kind} witness with period {meta.period}, measured defect "
        f"{xi.defect:.6g} and peak point norm {peak:.6g} (d = {d:.6g}, K = {k_steps}). "
        f"Wrote {path}."
    )


def _cmd_shadow(ctx) -> tuple[int, str]:
    _, _, sys_ = ctx["system"]
    section = ctx["command"]
    source = section.take_str("pseudotrajectory", required=True)
    options = shadow.ShadowOptions(
        max_iterations=section.take_int("max-iterations", default=100),
        tolerance=section.take_float("tolerance", default=1e-10),
    )
    xi = pseudo.load_pseudotrajectory(source, sys_)
    sol = shadow.find_periodic_shadow(sys_, xi, options)
    rows = [["i"] + [f"x{j}" for j in range(sys_.dim)]]
    for i, point in enumerate(sol.orbit):
        rows.append([str(i)] + [_fmt(v) for v in point])
    path = os.path.join(ctx["out_dir"], "shadow_orbit.csv")
    _write_rows(path, rows)
    if ctx["format"] == "table":
        _write_text(os.path.join(ctx["out_dir"], "shadow_orbit.txt"), _table_text(rows))
    status = "converged" if sol.converged else "did not converge"
    return 0, (
        f"Shadow solve on the period-{sol.period} pseudotrajectory (defect {xi.defect:.6g}) "
        f"{status} after {sol.iterations} iterations: sup distance {sol.sup_distance:.6g}, "
        f"ratio {sol.ratio:.6g}, orbit-equation residual {sol.residual:.3g}, minimal period "
        f"{sol.minimal_period}. Wrote {path}."
    )


def _cmd_scan(ctx) -> tuple[int, str]:
    kind, obj, sys_ = ctx["system"]
    section = ctx["command"]
    family_name = section.take_str("family", required=True)
    d_values = section.take_floats("d-values", required=True)
    if family_name == "perturbed-orbit":
        if kind not in ("toral", "perturbed-toral"):
            raise ConfigError("the perturbed-orbit family needs a torus system", section.path)
        period = section.take_int("period", required=True)
        base = shadow.toral_orbit_with_period(obj, period)
        if kind == "perturbed-toral":
            # refine the automorphism's orbit into an exact orbit of the
            # perturbed map before using it as the scan base
            seed_xi = pseudo.make_pseudotrajectory(sys_, base)
            refined = shadow.find_periodic_shadow(sys_, seed_xi)
            if not refined.converged:
                raise ConfigError(
                    "could not refine a base orbit of the perturbed system; "
                    "reduce the amplitude",
                    section.path,
                )
            base = refined.orbit
        family = shadow.PerturbedOrbitFamily(sys_, base, seed=ctx["seed"])
    elif family_name == "jordan-witness":
        model = _require_jordan(kind, obj, "scan", section.path)
        family = shadow.JordanWitnessFamily(model, section.take_int("K", required=True))
    else:
        raise ConfigError(f"unknown scan family {family_name!r}", section.path)
    scan = shadow.lipschitz_scan(sys_, family, d_values)
    path = os.path.join(ctx["out_dir"], "scan.csv")
    shadow.write_scan_csv(scan, path)
    if ctx["format"] == "table":
        _write_text(os.path.join(ctx["out_dir"], "scan.txt"), shadow.format_scan_table(scan))
    notes = []
    if sys_.linear_matrix is not None:
        xi = family.generate(d_values[0], 0)
        matrix = sys_.linear_matrix
        try:
            gaps = np.stack(
                [
                    sys_.space.diff(
                        xi.points[(i + 1) % xi.period], sys_.space.wrap(sys_.forward(xi.points[i]))
                    )
                    for i in range(xi.period)
                ]
            )
            correction = shadow.closed_form_linear_shadow(matrix, gaps)
            oracle_orbit = np.stack(
                [sys_.space.wrap(p - c) for p, c in zip(xi.points, correction)]
            )
            solved = shadow.find_periodic_shadow(sys_, xi)
            deviation = max(
                sys_.space.dist(a, b) for a, b in zip(oracle_orbit, solved.orbit)
            )
            ceiling = shadow.theoretical_linear_lipschitz_bound(matrix, xi.period)
            notes.append(
                f"linear oracle deviation {deviation:.3g}, theoretical ratio ceiling "
                f"{ceiling:.6g}"
            )
        except (NonhyperbolicMonodromyError, ShadowlabError) as exc:
            notes.append(f"linear oracle inapplicable ({exc.code})")
    converged = sum(1 for r in scan.rows if r.converged)
    verdict = "diverging" if scan.diverging else "bounded"
    note_text = ("; " + "; ".join(notes)) if notes else ""
    summary = (
        f"Scanned {len(scan.rows)} defect levels with the {family_name} family: "
        f"{converged}/{len(scan.rows)} rows converged, estimated Lipschitz constant "
        f"{scan.estimated_constant:.6g}, verdict {verdict}{note_text}. Wrote {path}."
    )
    return (2 if scan.diverging else 0), summary


def _cmd_orbit(ctx) -> tuple[int, str]:
    _, _, sys_ = ctx["system"]
    section = ctx["command"]
    point = np.array(section.take_floats("point", required=True))
    period = section.take_int("period", required=True)
    a_const = section.take_float("expansivity-a", default=0.5)
    window = section.take_int("window", default=2 * period)
    constant = section.take_float("L", default=1.0)
    periodic = shadow.verify_periodicity_by_expansivity(sys_, point, period, a_const, window)
    record = hyperbolicity.analyze_periodic_orbit(sys_, point, period)
    orbit_pts = systems.orbit_segment(sys_, point, 0, period - 1)
    residual = sys_.space.dist(systems.evaluate(sys_, point, period), point)
    norm_bound = systems.estimate_norm_bound(sys_, samples=1024)
    report = hyperbolicity.format_orbit_report([record], constant)
    report += "points\n"
    for row in orbit_pts:
        report += "  " + " ".join(_fmt(v) for v in row) + "\n"
    report += f"periodicity-residual {_fmt(residual)}\n"
    report += f"periodicity-check {'passed' if periodic else 'failed'}\n"
    report += f"jacobian-norm-bound {_fmt(norm_bound)}\n"
    txt_path = os.path.join(ctx["out_dir"], "orbit.txt")
    _write_text(txt_path, report)
    csv_path = os.path.join(ctx["out_dir"], "orbit.csv")
    _write_rows(csv_path, hyperbolicity.orbit_csv_rows([record], constant))
    beta = hyperbolicity.subspace_angle(record).minimum if record.hyperbolic else float("nan")
    return 0, (
        f"Analyzed the period-{period} orbit: index {record.index}, "
        f"{'hyperbolic' if record.hyperbolic else 'NOT hyperbolic'}, splitting gap "
        f"{beta:.6g}, finite-window periodicity check "
        f"{'passed' if periodic else 'failed'}. Wrote {txt_path} and {csv_path}."
    )


def _cmd_certificate(ctx) -> tuple[int, str]:
    _, _, sys_ = ctx["system"]
    section = ctx["command"]
    point = np.array(section.take_floats("point", required=True))
    period = section.take_int("period", required=True)
    d = section.take_float("d", default=1e-5)
    n_pullback = section.take_int("n-pullback", default=1)
    constant = section.take_float("L", default=1.0)
    record = hyperbolicity.analyze_periodic_orbit(sys_, point, period)
    if record.unstable_basis.shape[1] == 0:
        raise ConfigError("the orbit has no unstable direction", section.path)
    v_u = record.unstable_basis[:, 0]
    cert_only = hyperbolicity.expansion_certificate(sys_, record, v_u)
    xi, meta, cert = pseudo.witness_orbit_pullback(sys_, point, period, v_u, d, n_pullback)
    growth_ok = hyperbolicity.verify_growth_bound(cert, constant)
    sol = shadow.find_periodic_shadow(sys_, xi)
    return_dev = max(
        sys_.space.dist(sol.orbit[i], record.points[i % period]) for i in range(xi.period)
    )
    rows = [["i", "lambda_i", "a_i", "product", "bound"]]
    curve = cert.bound_curve(constant)
    for i in range(period):
        rows.append(
            [
                str(i),
                _fmt(cert.rates[i]),
                _fmt(cert.coefficients[i]),
                _fmt(cert.products[i]),
                _fmt(curve[i]),
            ]
        )
    csv_path = os.path.join(ctx["out_dir"], "certificate.csv")
    _write_rows(csv_path, rows)
    if ctx["format"] == "table":
        _write_text(os.path.join(ctx["out_dir"], "certificate.txt"), _table_text(rows))
    if abs(cert_only.tau - cert.tau) > 1e-12:  # certificate and witness must agree
        raise ShadowlabError("certificate/witness tau mismatch")
    return 0, (
        f"Expansion certificate at the period-{period} orbit: tau {cert.tau:.6g}, closing "
        f"coefficient {cert.coefficients[period]:.3g}, growth bound with constant "
        f"{constant:.6g} {'holds' if growth_ok else 'FAILS'}; displacement witness has period "
        f"{meta.period} and defect {xi.defect:.6g} (<= 4d = {4 * d:.6g}), and its shadow "
        f"returns to the orbit within {return_dev:.3g}. Wrote {csv_path}."
    )


def _cmd_angles(ctx) -> tuple[int, str]:
    kind, obj, sys_ = ctx["system"]
    section = ctx["command"]
    toral = _require_toral(kind, obj, "angles", section.path)
    max_period = section.take_int("max-period", required=True)
    horizon = section.take_int("horizon", default=8)
    rows = [["period", "point", "beta_min"]]
    records = []
    betas = []
    for m in range(1, max_period + 1):
        for point in hyperbolicity.enumerate_periodic_points_toral(toral.matrix, m):
            record = hyperbolicity.analyze_periodic_orbit(sys_, point, m)
            records.append(record)
            angle = hyperbolicity.subspace_angle(record)
            betas.append(angle.minimum)
            rows.append(
                [str(m), " ".join(_fmt(c) for c in point), _fmt(angle.minimum)]
            )
    constants = hyperbolicity.extract_uniform_constants(sys_, records, horizon)
    path = os.path.join(ctx["out_dir"], "angles.csv")
    _write_rows(path, rows)
    if ctx["format"] == "table":
        _write_text(os.path.join(ctx["out_dir"], "angles.txt"), _table_text(rows))
    return 0, (
        f"Splitting angles over {len(betas)} periodic points up to period {max_period}: "
        f"beta in [{min(betas):.9g}, {max(betas):.9g}]; fitted uniform constants "
        f"C = {constants.growth_constant:.6g}, rate = {constants.rate:.6g} "
        f"(horizon {horizon}). Wrote {path}."
    )


def _cmd_enumerate(ctx) -> tuple[int, str]:
    kind, obj, sys_ = ctx["system"]
    section = ctx["command"]
    toral = _require_toral(kind, obj, "enumerate", section.path)
    period = section.take_int("period", required=True)
    points = hyperbolicity.enumerate_periodic_points_toral(toral.matrix, period)
    worst = 0.0
    for point in points:
        image = systems.evaluate(sys_, point, period)
        worst = max(worst, sys_.space.dist(image, point))
    if worst > 1e-9:
        raise ShadowlabError(f"enumerated point failed the periodicity check ({worst:.3e})")
    rows = [[f"x{j}" for j in range(sys_.dim)]]
    rows += [[_fmt(c) for c in p] for p in points]
    path = os.path.join(ctx["out_dir"], "periodic_points.csv")
    _write_rows(path, rows)
    return 0, (
        f"Enumerated {len(points)} points with f^{period}(x) = x (worst float residual "
        f"{worst:.3g}). Wrote {path}."
    )


def _cmd_splice(ctx) -> tuple[int, str]:
    kind, obj, sys_ = ctx["system"]
    section = ctx["command"]
    toral = _require_toral(kind, obj, "splice", section.path)
    forward = section.take_int("forward", required=True)
    backward = section.take_int("backward", required=True)
    shift = section.take_ints("shift", default=[0, 1])
    if forward < 1 or backward < 1:
        raise ConfigError("forward and backward lengths must be >= 1", section.path)
    p = pseudo.homoclinic_point(toral, shift)
    seg_fwd = systems.orbit_segment(sys_, p, 0, forward - 1)
    seg_bwd = systems.orbit_segment(sys_, p, -backward, -1)
    xi = pseudo.splice_cycle(sys_, [seg_fwd, seg_bwd])
    path = os.path.join(ctx["out_dir"], "splice.csv")
    pseudo.save_pseudotrajectory(xi, path)
    return 0, (
        f"Spliced orbit segments of lengths {forward} and {backward} through the "
        f"doubly-asymptotic point ({p[0]:.6g}, {p[1]:.6g}): period {xi.period}, junction "
        f"defect {xi.defect:.6g}. Wrote {path}."
    )


_HANDLERS = {
    "witness": _cmd_witness,
    "shadow": _cmd_shadow,
    "scan": _cmd_scan,
    "orbit": _cmd_orbit,
    "lemma6": _cmd_certificate,
    "angles": _cmd_angles,
    "enumerate": _cmd_enumerate,
    "splice": _cmd_splice,
}


def run(config_path: str) -> int:
    """Execute one experiment config; prints a one-paragraph summary."""
    try:
        cfg = parse_config(config_path)
        seed = cfg.top.take_int("seed", default=0)
        system_section = cfg.section("system")
        command_section = cfg.section("command")
        output_section = cfg.section("output")
        name = command_section.take_str("name", required=True)
        if name not in COMMANDS:
            raise ConfigError(
                f"unknown command {name!r}; expected one of {', '.join(COMMANDS)}",
                cfg.path,
            )
        out_dir = output_section.take_str("directory", default=".")
        out_dir = os.environ.get(OUTPUT_DIR_ENV, out_dir)
        fmt = output_section.take_str("format", default="csv")
        if fmt not in ("csv", "table"):
            raise ConfigError(f"output format must be csv or table, got {fmt!r}", cfg.path)
        system_info = _build_system(system_section)
        ctx = {
            "system": system_info,
            "command": command_section,
            "out_dir": out_dir,
            "format": fmt,
            "seed": seed,
        }
        os.makedirs(out_dir, exist_ok=True)
        code, summary = _HANDLERS[name](ctx)
        cfg.reject_unused()
    except ConfigError as exc:
        print(f"config error: {exc}", file=_sys.stderr)
        return 1
    except ShadowlabError as exc:
        print(f"error ({exc.code}): {exc}", file=_sys.stderr)
        return 1
    print(summary)
    return code


def describe(kind: str) -> int:
    if kind not in DESCRIPTIONS:
        print(
            f"unknown system kind {kind!r}; expected one of {', '.join(sorted(DESCRIPTIONS))}",
            file=_sys.stderr,
        )
        return 1
    print(DESCRIPTIONS[kind], end="")
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="shadowlab",
        description="Periodic-shadowing experiments on discrete dynamical systems.",
    )
    sub = parser.add_subparsers(dest="verb", required=True)
    run_parser = sub.add_parser("run", help="execute an experiment config")
    run_parser.add_argument("config", help="path to the experiment config file")
    describe_parser = sub.add_parser("describe", help="print a system kind's parameter schema")
    describe_parser.add_argument("kind", help="toral | jordan | perturbed-toral")
    args = parser.parse_args(argv)
    if args.verb == "run":
        return run(args.config)
    return describe(args.kind)


if __name__ == "__main__":
    raise SystemExit(main())
