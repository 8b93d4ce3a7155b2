"""Command line front end: load scene files, run verification suites,
write reports.

A scene file is a TOML document with named charts, metrics, scalar
fields, maps, product declarations, and at most one scenario and one
plain immersion. Expressions are quoted strings in the grammar of
`twistprod.expr`. The format and the report schema are documented in
docs/scene_format.md and docs/report_schema.md.
"""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np
import tomli

from . import __version__, theorems
from .geometry import ChartDomain, MetricField, ScalarField
from .immersion import ImmersionSetup, SmoothMap
from .products import build_doubly_twisted, verify_proposition1
from .report import CheckRecord, finish_report

DEFAULT_SAMPLES = 50
DEFAULT_SEED = 42
DEFAULT_TOLERANCE = 1e-8
DEFAULT_SPD_TOLERANCE = 1e-12
SUITE_DEFAULT_TOLERANCE = {"moore": 1e-10, "lemma": 1e-10}

_RUN_ERRORS = (ArithmeticError, ValueError, np.linalg.LinAlgError)


class SceneError(ValueError):
    """Scene file failed to parse, resolve, or validate."""


# ------------------------------------------------------------ scene loading

@dataclass
class SceneFile:
    """A fully resolved scene: every name bound, every invariant checked."""

    path: str
    title: str
    charts: dict
    metrics: dict
    scalars: dict
    maps: dict
    products: dict
    scenario: object | None
    immersion: ImmersionSetup | None
    immersion_is_product: bool
    suites: list
    overrides: dict
    suite_options: dict

    @property
    def product_classes(self):
        return {name: prod.classification
                for name, prod in sorted(self.products.items())}


def _want(table, key, kind, where, default=None, required=False):
    if key not in table:
        if required:
            raise SceneError(f"{where}: missing required key '{key}'")
        return default
    value = table[key]
    if not isinstance(value, kind):
        names = kind.__name__ if isinstance(kind, type) else \
            "/".join(k.__name__ for k in kind)
        raise SceneError(f"{where}: key '{key}' must be {names}")
    return value


def _check_declared_class(name, product, declared):
    """Declared specialization flag must not contradict the expressions."""
    allowed = ("direct", "warped", "twisted", "doubly_warped",
               "doubly_twisted")
    if declared not in allowed:
        raise SceneError(
            f"products.{name}: unknown class '{declared}' "
            f"(expected one of {', '.join(allowed)})")
    s1 = product.sigma1.expression
    s2 = product.sigma2.expression
    coords1 = set(product.chart1.coords)
    coords2 = set(product.chart2.coords)

    def first_var(vars_):
        return sorted(vars_)[0]

    if declared == "direct":
        for label, e in (("sigma1", s1), ("sigma2", s2)):
            if not e.is_constant():
                raise SceneError(
                    f"products.{name}: declared direct but {label} depends "
                    f"on variable '{first_var(e.used_variables())}'")
    if declared in ("warped", "twisted"):
        if not (s2.is_constant() and s2.constant_value() == 1.0):
            extra = ""
            if not s2.is_constant():
                extra = (" (depends on variable "
                         f"'{first_var(s2.used_variables())}')")
            raise SceneError(
                f"products.{name}: declared {declared} but sigma2 is not "
                f"the constant 1{extra}")
    if declared == "warped":
        leaked = s1.used_variables() - coords1
        if leaked:
            raise SceneError(
                f"products.{name}: declared warped but sigma1 depends on "
                f"factor-2 variable '{first_var(leaked)}'")
    if declared == "doubly_warped":
        leaked1 = s1.used_variables() - coords1
        leaked2 = s2.used_variables() - coords2
        if leaked1:
            raise SceneError(
                f"products.{name}: declared doubly_warped but sigma1 "
                f"depends on factor-2 variable '{first_var(leaked1)}'")
        if leaked2:
            raise SceneError(
                f"products.{name}: declared doubly_warped but sigma2 "
                f"depends on factor-1 variable '{first_var(leaked2)}'")
    # doubly_twisted places no restriction


def _load_charts(data):
    charts = {}
    for name, table in data.items():
        where = f"charts.{name}"
        coords = _want(table, "coords", list, where, required=True)
        box = _want(table, "box", list, where, required=True)
        try:
            charts[name] = ChartDomain(
                tuple(coords), tuple(tuple(float(c) for c in b) for b in box))
        except (TypeError, ValueError) as exc:
            raise SceneError(f"{where}: {exc}") from None
    return charts


def _load_metrics(data, charts, spd_tol):
    metrics = {}
    for name, table in data.items():
        where = f"metrics.{name}"
        chart_name = _want(table, "chart", str, where, required=True)
        if chart_name not in charts:
            raise SceneError(f"{where}: unknown chart '{chart_name}'")
        components = _want(table, "components", list, where, required=True)
        try:
            metrics[name] = MetricField(
                charts[chart_name], components, spd_tol=spd_tol)
        except ValueError as exc:
            raise SceneError(f"{where}: {exc}") from None
    return metrics


def _load_scalars(data, charts):
    scalars = {}
    for name, table in data.items():
        where = f"scalars.{name}"
        chart_name = _want(table, "chart", str, where, required=True)
        if chart_name not in charts:
            raise SceneError(f"{where}: unknown chart '{chart_name}'")
        value = _want(table, "value", str, where, required=True)
        try:
            scalars[name] = ScalarField.from_source(charts[chart_name], value)
        except ValueError as exc:
            raise SceneError(f"{where}: {exc}") from None
    return scalars


def _resolve_sigma(source, scalars, product_coords, where):
    """A sigma entry is either a declared scalar name or an expression."""
    if source in scalars:
        scalar = scalars[source]
        leaked = set(scalar.chart.coords) - set(product_coords)
        if leaked:
            raise SceneError(
                f"{where}: scalar '{source}' lives on a chart with "
                f"variable '{sorted(leaked)[0]}' outside this product")
        return str(scalar.expression)
    return source


def _load_products(data, metrics, scalars, spd_tol):
    products = {}
    for name, table in data.items():
        where = f"products.{name}"
        f1 = _want(table, "factor1", str, where, required=True)
        f2 = _want(table, "factor2", str, where, required=True)
        for f in (f1, f2):
            if f not in metrics:
                raise SceneError(f"{where}: unknown metric '{f}'")
        m1, m2 = metrics[f1], metrics[f2]
        coords = m1.chart.coords + m2.chart.coords
        s1 = _resolve_sigma(
            _want(table, "sigma1", str, where, required=True),
            scalars, coords, where)
        s2 = _resolve_sigma(
            _want(table, "sigma2", str, where, required=True),
            scalars, coords, where)
        try:
            product = build_doubly_twisted(
                m1.chart, m1, m2.chart, m2, s1, s2, spd_tol=spd_tol)
        except _RUN_ERRORS as exc:
            raise SceneError(f"{where}: {exc}") from None
        declared = _want(table, "class", str, where)
        if declared is not None:
            _check_declared_class(name, product, declared)
        products[name] = product
    return products


def _load_maps(data, charts, products):
    maps = {}
    for name, table in data.items():
        where = f"maps.{name}"

        def chart_of(key):
            ref = _want(table, key, str, where, required=True)
            if ref in charts:
                return charts[ref]
            if ref in products:
                return products[ref].chart
            raise SceneError(f"{where}: unknown chart or product '{ref}'")

        source = chart_of("source")
        target = chart_of("target")
        components = _want(table, "components", list, where, required=True)
        try:
            maps[name] = SmoothMap.from_sources(source, target, components)
        except ValueError as exc:
            raise SceneError(f"{where}: {exc}") from None
    return maps


def _load_scenario(table, products, maps):
    where = "scenario"
    src = _want(table, "source", str, where, required=True)
    tgt = _want(table, "target", str, where, required=True)
    m1 = _want(table, "map1", str, where, required=True)
    m2 = _want(table, "map2", str, where, required=True)
    for p in (src, tgt):
        if p not in products:
            raise SceneError(f"{where}: unknown product '{p}'")
    for m in (m1, m2):
        if m not in maps:
            raise SceneError(f"{where}: unknown map '{m}'")
    try:
        return theorems.DoublyTwistedImmersionScenario(
            products[src], products[tgt], maps[m1], maps[m2])
    except _RUN_ERRORS as exc:
        raise SceneError(f"{where}: {exc}") from None


def _load_immersion(table, metrics, products, maps):
    where = "immersion"
    map_name = _want(table, "map", str, where, required=True)
    if map_name not in maps:
        raise SceneError(f"{where}: unknown map '{map_name}'")
    smooth_map = maps[map_name]
    split = None
    if "source_product" in table:
        prod_name = _want(table, "source_product", str, where)
        if prod_name not in products:
            raise SceneError(f"{where}: unknown product '{prod_name}'")
        product = products[prod_name]
        source_metric = product.assembled
        split = product.split
    else:
        metric_name = _want(table, "source_metric", str, where, required=True)
        if metric_name not in metrics:
            raise SceneError(f"{where}: unknown metric '{metric_name}'")
        source_metric = metrics[metric_name]
        raw = _want(table, "split", list, where)
        if raw is not None:
            split = tuple(int(v) for v in raw)
    target_name = _want(table, "target_metric", str, where, required=True)
    if target_name not in metrics:
        raise SceneError(f"{where}: unknown metric '{target_name}'")
    is_product = bool(table.get("product_map", "source_product" in table))
    try:
        setup = ImmersionSetup(
            source_metric, metrics[target_name], smooth_map, split=split)
    except _RUN_ERRORS as exc:
        raise SceneError(f"{where}: {exc}") from None
    return setup, is_product


def load_scene(path, spd_tolerance=DEFAULT_SPD_TOLERANCE):
    """Parse and fully resolve a scene file; raises SceneError."""
    path = Path(path)
    try:
        with open(path, "rb") as fh:
            data = tomli.load(fh)
    except OSError as exc:
        raise SceneError(f"cannot read scene file: {exc}") from None
    except tomli.TOMLDecodeError as exc:
        raise SceneError(f"{path.name}: {exc}") from None

    known = {"title", "suites", "charts", "metrics", "scalars", "maps",
             "products", "scenario", "immersion", "overrides",
             "suite_options"}
    unknown = set(data) - known
    if unknown:
        raise SceneError(f"unknown top-level section '{sorted(unknown)[0]}'")

    charts = _load_charts(_want(data, "charts", dict, "scene", default={}))
    metrics = _load_metrics(
        _want(data, "metrics", dict, "scene", default={}),
        charts, spd_tolerance)
    scalars = _load_scalars(
        _want(data, "scalars", dict, "scene", default={}), charts)
    products = _load_products(
        _want(data, "products", dict, "scene", default={}),
        metrics, scalars, spd_tolerance)
    maps = _load_maps(
        _want(data, "maps", dict, "scene", default={}), charts, products)

    scenario = None
    if "scenario" in data:
        scenario = _load_scenario(
            _want(data, "scenario", dict, "scene"), products, maps)
    immersion, is_product = None, False
    if "immersion" in data:
        immersion, is_product = _load_immersion(
            _want(data, "immersion", dict, "scene"), metrics, products, maps)

    suites = _want(data, "suites", list, "scene", default=[])
    for s in suites:
        if s not in SUITES:
            raise SceneError(
                f"unknown suite '{s}' (expected one of "
                f"{', '.join(sorted(SUITES))})")
    overrides = _want(data, "overrides", dict, "scene", default={})
    suite_options = _want(data, "suite_options", dict, "scene", default={})
    for s in suite_options:
        if s not in SUITES:
            raise SceneError(f"suite_options: unknown suite '{s}'")
    return SceneFile(
        path=str(path), title=_want(data, "title", str, "scene", default=""),
        charts=charts, metrics=metrics, scalars=scalars, maps=maps,
        products=products, scenario=scenario, immersion=immersion,
        immersion_is_product=is_product, suites=list(suites),
        overrides=dict(overrides), suite_options=dict(suite_options))


# ------------------------------------------------------------ suite runners

def _errored(suite, tolerance, seed, samples, message):
    return finish_report(suite, tolerance, seed, samples, [], error=message)


def _scenario_runner(suite, fn):
    def run(scene, samples, seed, tolerance):
        if scene.scenario is None:
            return _errored(suite, tolerance, seed, samples,
                            "scene declares no scenario")
        return fn(scene.scenario, samples=samples, seed=seed,
                  tolerance=tolerance)
    return run


def _run_prop1(scene, samples, seed, tolerance):
    if not scene.products:
        return _errored("prop1", tolerance, seed, samples,
                        "scene declares no products")
    if len(scene.products) == 1:
        (product,) = scene.products.values()
        return verify_proposition1(
            product, samples=samples, seed=seed, tolerance=tolerance)
    checks, details = [], {}
    for name in sorted(scene.products):
        rep = verify_proposition1(
            scene.products[name], samples=samples, seed=seed,
            tolerance=tolerance)
        details[name] = dict(rep.details)
        for c in rep.checks:
            checks.append(CheckRecord(
                label=f"{name}:{c.label}", point=c.point,
                residual=c.residual, passed=c.passed, extras=dict(c.extras)))
    return finish_report("prop1", tolerance, seed, samples, checks, details)


def _run_axioms(scene, samples, seed, tolerance):
    metrics = dict(scene.metrics)
    for name in sorted(scene.products):
        metrics[f"{name}_twisted"] = scene.products[name].assembled
    if not metrics:
        return _errored("axioms", tolerance, seed, samples,
                        "scene declares no metrics")
    return theorems.verify_connection_axioms(
        metrics, samples=samples, seed=seed, tolerance=tolerance)


def _run_tg(scene, samples, seed, tolerance):
    if scene.scenario is None:
        return _errored("tg", tolerance, seed, samples,
                        "scene declares no scenario")
    return theorems.verify_totally_geodesic(
        scene.scenario, samples=samples, seed=seed, tolerance=tolerance)


def _run_moore(scene, samples, seed, tolerance):
    if scene.immersion is not None:
        setup, is_product = scene.immersion, scene.immersion_is_product
    elif scene.scenario is not None:
        setup, is_product = scene.scenario.twisted_setup, True
    else:
        return _errored("moore", tolerance, seed, samples,
                        "scene declares neither an immersion nor a scenario")
    return theorems.moore_forward_check(
        setup, samples=samples, seed=seed, tolerance=tolerance,
        is_product_map=is_product)


SUITES = {
    "prop1": _run_prop1,
    "axioms": _run_axioms,
    "hphi": _scenario_runner("hphi", theorems.verify_hphi_decomposition),
    "thm31": _scenario_runner("thm31", theorems.verify_thm31_inequality),
    "tg": _run_tg,
    "minimality": _scenario_runner("minimality", theorems.verify_minimality),
    "dwarped": _scenario_runner(
        "dwarped", theorems.verify_corollary_doubly_warped),
    "chen": _scenario_runner("chen", theorems.verify_corollary_chen),
    "lemma": _scenario_runner(
        "lemma", theorems.verify_normal_gradient_lemma),
    "moore": _run_moore,
}


def _suite_settings(scene, suite, args_samples, args_seed, args_tolerance,
                    env_seed):
    """Resolve samples/seed/tolerance for one suite.

    Precedence: command line flag, then TWISTPROD_SEED (seed only), then
    the scene's per-suite options, then the scene's overrides section,
    then built-in defaults.
    """
    options = scene.suite_options.get(suite, {})
    overrides = scene.overrides

    def pick(flag, key, fallback):
        if flag is not None:
            return flag
        if key in options:
            return options[key]
        if key in overrides:
            return overrides[key]
        return fallback

    samples = int(pick(args_samples, "samples", DEFAULT_SAMPLES))
    seed_flag = args_seed if args_seed is not None else env_seed
    seed = int(pick(seed_flag, "seed", DEFAULT_SEED))
    tolerance = float(pick(
        args_tolerance, "tolerance",
        SUITE_DEFAULT_TOLERANCE.get(suite, DEFAULT_TOLERANCE)))
    return samples, seed, tolerance


def run(scene, suite_names, args_samples=None, args_seed=None,
        args_tolerance=None, env_seed=None):
    """Run the selected suites in order; returns (exit_code, reports).

    Exit code 0 when every suite passes; otherwise the 1-based index of
    the first suite that failed or errored.
    """
    reports = []
    exit_code = 0
    for position, suite in enumerate(suite_names, start=1):
        samples, seed, tolerance = _suite_settings(
            scene, suite, args_samples, args_seed, args_tolerance, env_seed)
        try:
            report = SUITES[suite](scene, samples, seed, tolerance)
        except _RUN_ERRORS as exc:
            report = _errored(suite, tolerance, seed, samples,
                              f"{type(exc).__name__}: {exc}")
        reports.append(report)
        if not report.passed and exit_code == 0:
            exit_code = position
    return exit_code, reports


# ----------------------------------------------------------------- plumbing

def bundled_scene_names():
    base = resources.files("twistprod") / "scenes"
    return sorted(
        p.name[:-len(".scene")] for p in base.iterdir()
        if p.name.endswith(".scene"))


def resolve_scene_path(ref):
    """An existing path wins; otherwise try the bundled scene names."""
    path = Path(ref)
    if path.exists():
        return path, False
    name = path.name
    if name.endswith(".scene"):
        name = name[:-len(".scene")]
    candidate = resources.files("twistprod") / "scenes" / f"{name}.scene"
    if candidate.is_file():
        return candidate, True
    raise SceneError(
        f"scene '{ref}' is neither a file nor a bundled scene "
        f"(bundled: {', '.join(bundled_scene_names())})")


def write_reports(reports, scene_path, report_dir, fmt):
    report_dir = Path(report_dir)
    report_dir.mkdir(parents=True, exist_ok=True)
    stem = Path(scene_path).name
    if stem.endswith(".scene"):
        stem = stem[:-len(".scene")]
    ext = "json" if fmt == "json" else "txt"
    paths = []
    for report in reports:
        out = report_dir / f"{stem}.{report.suite}.report.{ext}"
        content = report.to_json() if fmt == "json" else report.render_text()
        out.write_text(content, encoding="utf-8")
        paths.append(out)
    return paths


def _cmd_verify(args):
    env_seed = None
    if args.seed is None:
        raw = os.environ.get("TWISTPROD_SEED")
        if raw is not None:
            try:
                env_seed = int(raw)
            except ValueError:
                print(f"error: TWISTPROD_SEED must be numeric, got {raw!r}",
                      file=sys.stderr)
                return 2
    try:
        scene_path, bundled = resolve_scene_path(args.scene)
        scene = load_scene(scene_path, spd_tolerance=args.spd_tolerance)
    except SceneError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

    if args.suite == "all":
        selected = list(scene.suites)
        if not selected:
            print("error: scene declares no suites", file=sys.stderr)
            return 2
    else:
        if args.suite not in SUITES:
            print(f"error: unknown suite '{args.suite}' (expected one of "
                  f"{', '.join(sorted(SUITES))} or all)", file=sys.stderr)
            return 2
        selected = [args.suite]

    exit_code, reports = run(
        scene, selected, args_samples=args.samples, args_seed=args.seed,
        args_tolerance=args.tolerance, env_seed=env_seed)

    if args.report is not None:
        report_dir = Path(args.report)
    elif bundled:
        report_dir = Path.cwd()
    else:
        report_dir = Path(scene_path).parent
    paths = write_reports(reports, scene_path, report_dir, args.format)

    title = scene.title or Path(scene_path).name
    print(f"scene: {title}")
    if scene.product_classes:
        flags = ", ".join(f"{k}={v}" for k, v in scene.product_classes.items())
        print(f"products: {flags}")
    for report, out in zip(reports, paths):
        print(report.summary_line())
        print(f"  report: {out}")
    if exit_code == 0:
        print("all suites passed")
    else:
        bad = reports[exit_code - 1]
        print(f"first non-passing suite: {bad.suite} (index {exit_code})")
    return exit_code


def _cmd_scenes(args):
    for name in bundled_scene_names():
        print(name)
    return 0


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="twistprod",
        description="Verify twisted-product geometry statements on scene "
                    "files at sampled points.")
    parser.add_argument("--version", action="version",
                        version=f"twistprod {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_verify = sub.add_parser(
        "verify", help="run verification suites on a scene file")
    p_verify.add_argument("scene",
                          help="path to a .scene file or a bundled scene name")
    p_verify.add_argument("--suite", default="all",
                          help="suite name, or 'all' for the scene's list")
    p_verify.add_argument("--samples", type=int, default=None,
                          help=f"sample points per suite "
                               f"(default {DEFAULT_SAMPLES})")
    p_verify.add_argument("--seed", type=int, default=None,
                          help=f"sampling seed (default {DEFAULT_SEED}; "
                               f"TWISTPROD_SEED honored when absent)")
    p_verify.add_argument("--tolerance", type=float, default=None,
                          help=f"residual tolerance "
                               f"(default {DEFAULT_TOLERANCE})")
    p_verify.add_argument("--spd-tolerance", type=float,
                          default=DEFAULT_SPD_TOLERANCE,
                          help="positive-definiteness pivot tolerance "
                               f"(default {DEFAULT_SPD_TOLERANCE})")
    p_verify.add_argument("--report", default=None,
                          help="directory for per-suite report files "
                               "(default: beside the scene file, or the "
                               "working directory for bundled scenes)")
    p_verify.add_argument("--format", choices=("text", "json"),
                          default="json",
                          help="report file format (default json)")
    p_verify.set_defaults(fn=_cmd_verify)

    p_scenes = sub.add_parser("scenes", help="list bundled scene names")
    p_scenes.set_defaults(fn=_cmd_scenes)

    args = parser.parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
