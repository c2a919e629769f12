"""Dispatch of job specifications to the computational modules.

Each handler turns ``(inputs, options, seed, budget)`` into a payload plus
exactness flags, confidence half-widths and a violation count.  Tables are
stored as ``{"header": [...], "rows": [...]}`` and plots as line-plot specs,
so that :func:`records.emit_outputs` can render a replayed record.
"""

from __future__ import annotations

import json
from importlib import resources
from pathlib import Path

from .curve import (
    NormedInvertibleModule,
    adeg,
    adeg_exact,
    bigness_classify,
    continuity_table,
    prop37_constants,
    prop37_verify,
    volume_estimate,
)
from .gs import gs_core_report, prop21_report
from .lattice import BudgetExceeded, enumerate_ball, h1_polar, write_points
from .norms import module_from_json
from .p1 import FSNormContext, gromov_ratio, hs_slope, p1_h0
from .plotting import line_plot_spec
from .records import JobSpec, ResultCache, ResultRecord, SpecError
from .volume import chi

DEFAULT_A_VALUES = (1.5, 2, 3)
DEFAULT_LAMBDAS = (0.1, 0.5, 1, 2)
DEFAULT_EPS = (0.2, 0.1, 0.05)


def load_json_arg(value):
    """Inline JSON text, a path to a JSON file, or an already parsed object."""
    if not isinstance(value, str):
        return value
    text = value.strip()
    if text[:1] in "[{" or text[:1].isdigit() or text[:1] == "-":
        try:
            return json.loads(text)
        except json.JSONDecodeError as exc:
            raise SpecError(f"invalid JSON: {exc}") from exc
    path = Path(text)
    if path.exists():
        try:
            return json.loads(path.read_text())
        except json.JSONDecodeError as exc:
            raise SpecError(f"invalid JSON in {path}: {exc}") from exc
    # bare strings such as ring names pass through
    return value


def bundled_suite() -> list[dict]:
    """The shipped rank <= 3 module suite used by ``gs-check`` by default."""
    text = resources.files("arakelov").joinpath("data/gs_suite_rank3.json").read_text()
    return json.loads(text)["modules"]


def _table(header, rows) -> dict:
    return {"header": list(header), "rows": [list(r) for r in rows]}


def _module(inputs):
    return module_from_json(load_json_arg(inputs["module"]))


def _curve(inputs, key):
    return NormedInvertibleModule.from_json(load_json_arg(inputs[key]))


def _report_rows(reports):
    return [[r.name, r.lhs, r.rhs, r.slack, r.holds] for r in reports]


# ---------------------------------------------------------------------------
# handlers


def _hzero(spec: JobSpec):
    mod = _module(spec.inputs)
    want = bool(spec.options.get("points"))
    rep = enumerate_ball(mod, budget=spec.budget, want_points=want)
    if not rep.exact:
        raise BudgetExceeded(f"enumeration exceeded {spec.budget} examined points", rep)
    if want:
        write_points(spec.options["points"], rep.points)
    payload = dict(rep.to_json(), h0=rep.log_count_plus_torsion)
    return payload, {"h0": True}, {}, 0


def _hone(spec: JobSpec):
    mod = _module(spec.inputs)
    method = spec.options.get("method", "dual")
    if method == "polar":
        value = h1_polar(mod, budget=spec.budget)
        return {"h1": value, "method": "polar"}, {"h1": True}, {}, 0
    if method != "dual":
        raise SpecError(f"unknown h1 method {method!r}")
    rep = enumerate_ball(mod.dual(), budget=spec.budget)
    if not rep.exact:
        raise BudgetExceeded(f"enumeration exceeded {spec.budget} examined points", rep)
    payload = dict(rep.to_json(), h1=rep.log_count_plus_torsion, method="dual")
    return payload, {"h1": True}, {}, 0


def _chi(spec: JobSpec):
    mod = _module(spec.inputs)
    kw = {"seed": int(spec.seed)}
    for key in ("samples", "rel_ci", "workers"):
        if key in spec.options:
            kw[key] = spec.options[key]
    if spec.options.get("monte_carlo"):
        kw["force_monte_carlo"] = True
    res = chi(mod, **kw)
    return res.to_json(), {"chi": res.method == "exact"}, {"chi": res.half_width}, 0


def _dual(spec: JobSpec):
    mod = _module(spec.inputs)
    return {"module": mod.dual().to_json()}, {"dual": True}, {}, 0


def _gs_check(spec: JobSpec):
    opts = spec.options
    suite = load_json_arg(spec.inputs["suite"]) if "suite" in spec.inputs else bundled_suite()
    a_values = tuple(opts.get("a_values", DEFAULT_A_VALUES))
    lambdas = tuple(opts.get("lambdas", DEFAULT_LAMBDAS))
    volume_kw = {"seed": int(spec.seed)}
    reports = []
    for obj in suite:
        mod = module_from_json(obj)
        reports.extend(gs_core_report(mod, a_values, budget=spec.budget, volume_kw=volume_kw))
        reports.extend(prop21_report(mod, budget=spec.budget, volume_kw=volume_kw))
        for lam in lambdas:
            reports.extend(prop21_report(mod, lam=lam, items=(3,), budget=spec.budget))
    reports.sort(key=lambda r: (r.instance_digest, r.name))
    bad = sum(1 for r in reports if not r.holds)
    payload = {
        "instances": len(suite),
        "reports": len(reports),
        "tables": {"reports": _table(("name", "lhs", "rhs", "slack", "holds"), _report_rows(reports))},
    }
    ci = {"max_report_ci": max((r.ci for r in reports), default=0.0)}
    return payload, {"reports": all(r.ci == 0 for r in reports)}, ci, bad


def _curve_volume(spec: JobSpec):
    L = _curve(spec.inputs, "L")
    N = _curve(spec.inputs, "N") if "N" in spec.inputs else None
    m_max = spec.options.get("m_max")
    cap = spec.options.get("count_cap")
    if m_max is None and cap is None:
        cap = 1_000_000
    series = volume_estimate(L, N, m_max, count_cap=cap, budget=spec.budget)
    payload = series.to_json()
    payload["adeg"] = adeg(L)
    payload["tables"] = {"series": _table(("m", "h0", "h0_over_m"), series.rows())}
    payload["plots"] = [
        line_plot_spec("series", series.m, {"h0(mL)/m": series.ratios}, "m", "h0 / m", "volume estimate", reference=adeg(L))
    ]
    return payload, {"series": not series.truncated}, {}, 0


def _curve_degree(spec: JobSpec):
    L = _curve(spec.inputs, "L")
    return {"adeg": adeg(L), "adeg_exact": str(adeg_exact(L))}, {"adeg": True}, {}, 0


def _curve_continuity(spec: JobSpec):
    L = _curve(spec.inputs, "L")
    A = _curve(spec.inputs, "A")
    eps = tuple(spec.options.get("eps", DEFAULT_EPS))
    m = int(spec.options.get("m", 30))
    rows = continuity_table(L, A, eps, m, budget=spec.budget)
    table = [(r.eps, r.estimate, r.prediction, r.gap, r.m_max) for r in rows]
    payload = {
        "tables": {"continuity": _table(("eps", "estimate", "prediction", "gap", "m_max"), table)},
        "plots": [
            line_plot_spec(
                "continuity",
                [r.eps for r in rows],
                {"estimate": [r.estimate for r in rows], "adeg L + eps adeg A": [r.prediction for r in rows]},
                "eps",
                "volume",
                "volume of L + eps A",
            )
        ],
        "max_gap": max(r.gap for r in rows),
    }
    return payload, {"continuity": True}, {}, 0


def _prop37(spec: JobSpec):
    L = _curve(spec.inputs, "L")
    A = _curve(spec.inputs, "A")
    s = load_json_arg(spec.inputs["s"])
    a_max = int(spec.options.get("a_max", 12))
    reports = prop37_verify(L, A, s, a_max, budget=spec.budget)
    c, d = prop37_constants(L, A, s)
    bad = sum(1 for r in reports if not r.holds)
    payload = {
        "C": c,
        "D": d,
        "reports": len(reports),
        "tables": {"reports": _table(("name", "lhs", "rhs", "slack", "holds"), _report_rows(reports))},
    }
    return payload, {"reports": True}, {}, bad


def _bigness(spec: JobSpec):
    L = _curve(spec.inputs, "L")
    res = bigness_classify(L, int(spec.options.get("m_probe", 10)), budget=spec.budget)
    payload = {"status": res.status, "witness": res.witness, "m": res.m, "sup_value": res.sup_value}
    return payload, {"status": res.status != "inconclusive"}, {}, 0


def _p1_ctx_factory(opts):
    def make(m):
        return FSNormContext(m, grid=opts.get("grid"), tol=float(opts.get("tol", 1e-10)))

    return make


def _p1_hs(spec: JobSpec):
    opts = spec.options
    m_max = int(opts.get("m_max", 5))
    rows = hs_slope(m_max, _p1_ctx_factory(opts), budget=spec.budget, seed=int(spec.seed), samples=int(opts.get("samples", 200_000)))
    table = [(r.m, r.h0, r.h1, r.chi, r.chi_ci, r.slope, r.chi_slope, r.gap_bound_holds, r.ambiguous) for r in rows]
    payload = {
        "tables": {"slopes": _table(("m", "h0", "h1", "chi", "chi_ci", "slope", "chi_slope", "window_holds", "ambiguous"), table)},
        "plots": [
            line_plot_spec(
                "slopes",
                [r.m for r in rows],
                {"2 h0 / m^2": [r.slope for r in rows], "2 chi / m^2": [r.chi_slope for r in rows]},
                "m",
                "slope",
                "projective line, sup-norm",
            )
        ],
    }
    bad = sum(1 for r in rows if not r.gap_bound_holds)
    return payload, {"counts": all(r.ambiguous == 0 for r in rows)}, {"chi": max(r.chi_ci for r in rows)}, bad


def _p1_gromov(spec: JobSpec):
    opts = spec.options
    m_max = int(opts.get("m_max", 10))
    trials = int(opts.get("trials", 200))
    make = _p1_ctx_factory(opts)
    results = [gromov_ratio(m, trials, make(m), seed=int(spec.seed)) for m in range(0, m_max + 1)]
    ratios = {r.m: r.max_ratio for r in results}
    ref = ratios.get(1, ratios[0])
    top = max(v for m, v in ratios.items() if m >= 1) if m_max >= 1 else ratios[0]
    payload = {
        "tables": {"gromov": _table(("m", "max_ratio", "trials"), [(r.m, r.max_ratio, r.trials) for r in results])},
        "plots": [line_plot_spec("gromov", [r.m for r in results], {"max ratio": [r.max_ratio for r in results]}, "m", "sup^2 / ((m+1)^2 L2^2)", "Gromov ratio")],
        "max_over_m": top,
        "bound": 3 * ref,
    }
    return payload, {"gromov": False}, {}, int(top > 3 * ref)


def _p1_count(spec: JobSpec):
    opts = spec.options
    m = int(opts.get("m", 2))
    kind = opts.get("kind", "sup")
    res = p1_h0(m, kind, _p1_ctx_factory(opts)(m), budget=spec.budget)
    payload = {"m": m, "kind": kind, "count": res.count, "h0": res.h0, "ambiguous": res.ambiguous, "points_examined": res.points_examined}
    return payload, {"count": res.exact}, {}, 0


HANDLERS = {
    "hzero": _hzero,
    "hone": _hone,
    "chi": _chi,
    "dual": _dual,
    "gs-check": _gs_check,
    "curve-volume": _curve_volume,
    "curve-degree": _curve_degree,
    "curve-continuity": _curve_continuity,
    "prop37": _prop37,
    "bigness": _bigness,
    "p1-hs": _p1_hs,
    "p1-gromov": _p1_gromov,
    "p1-count": _p1_count,
}


def run_job(spec: JobSpec, *, cache_dir=None, use_cache: bool = True) -> ResultRecord:
    """Run ``spec`` or replay its cached record."""
    cache = ResultCache(cache_dir) if use_cache else None
    digest = spec.digest()
    if cache is not None:
        hit = cache.get(digest)
        if hit is not None:
            return hit
    try:
        payload, exact_flags, ci, bad = HANDLERS[spec.command](spec)
    except (KeyError, TypeError) as exc:
        raise SpecError(f"malformed input for {spec.command}: {exc}") from exc
    record = ResultRecord.new(spec, payload, exact_flags, ci, bad)
    if cache is not None:
        cache.put(record)
    return record

