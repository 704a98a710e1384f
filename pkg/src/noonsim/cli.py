"""Scenario runner: ``noonsim <scheme> --config cfg.json --out result.json``.

Exit codes: 0 success, 1 configuration error, 2 numerical failure,
3 infeasible postselection (no heralded outcome).
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import jsonschema
import numpy as np

from . import __version__, report
from .fock import ConfigurationError, NumericalError, PulseSchedule, ResourceError

SCHEMES = ("qfg", "bootstrap", "noon-gun", "ghz-scan", "ramsey", "feasibility")
SCHEMA_VERSION = "1.0"
THREADS_ENV = "NOONSIM_THREADS"
ALIASES = {"efficiency": "detector_efficiency"}

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL, EXIT_INFEASIBLE = 0, 1, 2, 3


class ConfigError(Exception):
    """Unparseable or invalid configuration; the message names the field."""


def load_schema(name: str) -> dict:
    text = resources.files("noonsim.schemas").joinpath(f"{name}.schema.json").read_text("utf-8")
    return json.loads(text)


@dataclass(frozen=True)
class ScenarioConfig:
    scheme: str
    params: dict = field(default_factory=dict)
    output: str | None = None
    seed: int = 0
    mode: str = "exact"

    def echo(self) -> dict:
        d = {"scheme": self.scheme, **self.params, "seed": self.seed, "mode": self.mode}
        if self.output is not None:
            d["output"] = self.output
        return d


def _field_path(err: jsonschema.ValidationError) -> str:
    path = "".join(f"[{p}]" if isinstance(p, int) else f".{p}" for p in err.absolute_path)
    return "config" + path


def _first_error(validator, doc) -> jsonschema.ValidationError | None:
    errors = list(validator.iter_errors(doc))
    if not errors:
        return None
    # report the deepest error at the earliest field, in document order
    order = {k: i for i, k in enumerate(doc)} if isinstance(doc, dict) else {}

    def key(e):
        head = e.absolute_path[0] if e.absolute_path else None
        return (order.get(head, -1) if head is not None else len(order), -len(e.absolute_path))

    err = min(errors, key=key)
    return jsonschema.exceptions.best_match([err]) or err


def _defaults(schema: dict) -> dict:
    out = {}
    for name, prop in schema.get("properties", {}).items():
        if "$ref" in prop:
            prop = _SCHEMA["$defs"][prop["$ref"].rsplit("/", 1)[-1]]
        if "default" in prop:
            out[name] = prop["default"]
    return out


_SCHEMA = load_schema("config")
_RESULT_SCHEMA = load_schema("result")


def parse_config(text: str, scheme: str | None = None, overrides: dict | None = None) -> ScenarioConfig:
    """Parse and validate a JSON config.

    ``scheme`` fills in or must match the document's scheme; ``overrides``
    (command-line ``seed``/``mode``) replace config values before validation.
    """
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise ConfigError("config: expected a JSON object")
    doc = {ALIASES.get(k, k): v for k, v in doc.items()}
    doc.update(overrides or {})
    if scheme is not None:
        if "scheme" in doc and doc["scheme"] != scheme:
            raise ConfigError(f"config.scheme: '{doc['scheme']}' does not match subcommand '{scheme}'")
        doc.setdefault("scheme", scheme)
    name = doc.get("scheme")
    if name not in SCHEMES:
        raise ConfigError(f"config.scheme: {name!r} is not one of the allowed schemes {list(SCHEMES)}")
    sub = _SCHEMA["$defs"][name]
    validator = jsonschema.Draft202012Validator({**sub, "$defs": _SCHEMA["$defs"]})
    err = _first_error(validator, doc)
    if err is not None:
        raise ConfigError(f"{_field_path(err)}: {err.message}")
    full = {**_defaults(sub), **doc}
    params = {k: full[k] for k in sub["properties"] if k in full and k not in ("scheme", "seed", "mode", "output")}
    return ScenarioConfig(name, params, full.get("output"), int(full["seed"]), full["mode"])


# ---------------------------------------------------------------------------
# scheme runners: each returns (outcomes, summary, columns, rows)


def _sample_outcome(outcomes, seed: int):
    rng = np.random.default_rng(seed)
    p = np.array([o.probability for o in outcomes], dtype=float)
    return [outcomes[int(rng.choice(len(outcomes), p=p / p.sum()))]]


_OUTCOME_COLUMNS = ["n_D1", "n_D2", "heralded", "probability", "noon_fidelity",
                    "corrected_fidelity", "reference_form_fidelity"]


def _fredkin_summary(outcomes, sampled) -> tuple[dict, list]:
    from .fredkin import herald_probability, mean_heralded_fidelity

    heralded = [o for o in outcomes if o.heralded]
    summary = {
        "herald_probability": herald_probability(outcomes),
        "best_fidelity": max((o.corrected_fidelity for o in heralded), default=0.0),
        "worst_heralded_fidelity": min((o.corrected_fidelity for o in heralded), default=0.0),
        "mean_heralded_fidelity": mean_heralded_fidelity(outcomes, corrected=True),
        "mean_heralded_fidelity_uncorrected": mean_heralded_fidelity(outcomes),
        "n_outcomes": len(outcomes),
    }
    if sampled:
        summary["sampled_counts"] = [outcomes[0].n_D1, outcomes[0].n_D2]
    rows = [[o.as_record()[c] for c in _OUTCOME_COLUMNS] for o in outcomes]
    return summary, rows


def _run_qfg(cfg: ScenarioConfig):
    from .fredkin import InfeasiblePostselection, run_single_control

    p = cfg.params
    outcomes = run_single_control(p["N"], p["chi"], p["detector_efficiency"])
    if not any(o.heralded and o.probability > 0 for o in outcomes):
        raise InfeasiblePostselection("no heralded single-photon detection")
    if cfg.mode == "sampled":
        outcomes = _sample_outcome(outcomes, cfg.seed)
    summary, rows = _fredkin_summary(outcomes, cfg.mode == "sampled")
    return [o.as_record() for o in outcomes], summary, _OUTCOME_COLUMNS, rows


def _run_bootstrap(cfg: ScenarioConfig):
    from .fredkin import BootstrapConfig, kerr_boost_requirement, run_bootstrap

    p = cfg.params
    bc = BootstrapConfig(p["N"], p["K"], p["phi0"], p["detector_efficiency"], cfg.mode, cfg.seed)
    outcomes = run_bootstrap(bc)
    summary, rows = _fredkin_summary(outcomes, cfg.mode == "sampled")
    summary["total_phase"] = p["K"] * p["phi0"]
    summary["K_required_for_pi"] = kerr_boost_requirement(p["phi0"], math.pi)
    return [o.as_record() for o in outcomes], summary, _OUTCOME_COLUMNS, rows


def _run_noon_gun(cfg: ScenarioConfig):
    from .atomcavity import NoonGunParams, ghz_to_noon_pipeline, optimize_ramp

    p = cfg.params
    sched = PulseSchedule(p["shape"], p["peak"], p["duration"], p["steps"], p["width"])
    params = NoonGunParams(p["N"], p["g_L"], p["g_R"], sched, p["detuning"])
    res = ghz_to_noon_pipeline(params, p["eta"], p["ghz_time"])
    summary = res.summary()
    if res.scan is not None:
        summary["reference_eta_t_class_fidelity"] = res.scan.reference_class_fidelity
    if "target_fidelity" in p:
        opt = optimize_ramp(params, p["target_fidelity"])
        summary.update({
            "ramp_feasible": opt.feasible,
            "ramp_min_duration": opt.duration,
            "ramp_fidelity": opt.fidelity,
        })
    st = res.stirap
    columns = ["t", "omega_p", "excited", "photons_L", "photons_R"]
    rows = [list(r) for r in zip(st.times, st.omega, st.excited, st.photons_L, st.photons_R)]
    outcomes = [{
        "stage": "path_output",
        "weight": res.path_state_weight,
        "amplitudes": [
            {"occupations": list(occ), "re": float(a.real), "im": float(a.imag)}
            for occ, a in res.path_state.terms().items()
        ],
    }]
    return outcomes, summary, columns, rows


def _scan_one(N: int, eta: float, step: float):
    from .atomcavity import ghz_scan

    return ghz_scan(N, eta, step)


def _threads() -> int:
    raw = os.environ.get(THREADS_ENV, "")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def _run_ghz_scan(cfg: ScenarioConfig):
    p = cfg.params
    Ns = p["N"] if isinstance(p["N"], list) else [p["N"]]
    n_threads = min(_threads(), len(Ns))
    if n_threads > 1:
        with ThreadPoolExecutor(n_threads) as pool:
            scans = list(pool.map(lambda n: _scan_one(n, p["eta"], p["step"]), Ns))
    else:
        scans = [_scan_one(n, p["eta"], p["step"]) for n in Ns]
    outcomes = [s.summary() for s in scans]
    first = outcomes[0]
    summary = {
        "located_eta_t": first["located_eta_t"],
        "ghz_class_fidelity": first["ghz_class_fidelity"],
        "reference_eta_t": math.pi,
        "reference_claim_confirmed": all(o["reference_claim_confirmed"] for o in outcomes),
        "comparison": [
            f"N={o['N']}: located eta*t = {o['located_eta_t']:.6f} "
            f"({o['located_eta_t_over_pi']:.6f} pi, class fidelity {o['ghz_class_fidelity']:.12f}); "
            f"reference eta*t = pi gives class fidelity {o['reference_eta_t_class_fidelity']:.12f}"
            for o in outcomes
        ],
    }
    columns = ["N", "eta_t", "strict_fidelity", "class_fidelity"]
    rows = [[s.N, float(t * s.eta), float(f), float(c)]
            for s in scans for t, f, c in zip(s.times, s.fidelity, s.class_fidelity)]
    return outcomes, summary, columns, rows


def _run_ramsey(cfg: ScenarioConfig):
    from .ramsey import RamseyParams, run_ramsey_qfg

    p = cfg.params
    if "phi" in p:
        rp = RamseyParams.from_phase(p["N"], p["phi"], p.get("g", 1.0), p.get("Delta", 1.0))
    else:
        rp = RamseyParams(p["N"], p["g"], p["tau_c"], p["Delta"])
    outcomes = run_ramsey_qfg(rp)
    recs = [o.as_record() for o in outcomes]
    summary = {
        "phi": rp.phi,
        "tau_c": rp.tau_c,
        "best_fidelity": max(o.noon_fidelity for o in outcomes),
        "probabilities": {o.atom_state: o.probability for o in outcomes},
    }
    columns = ["atom_state", "probability", "noon_fidelity", "psi1_fidelity", "psi2_fidelity"]
    rows = [[r[c] for c in columns] for r in recs]
    return recs, summary, columns, rows


def _run_feasibility(cfg: ScenarioConfig):
    from .feasibility import FeasibilityInput, feasibility_report

    p = cfg.params
    inp = FeasibilityInput(p["Omega_c"], p["g"], p["kappa"], p["Delta"], p["N_atoms"],
                           p["detector_efficiency"], p["phi0"])
    rep = feasibility_report(inp, p["transfer_duration"], p["excited_fraction"], p["target_phi"])
    return [], rep.as_dict(), [], []


RUNNERS = {
    "qfg": _run_qfg,
    "bootstrap": _run_bootstrap,
    "noon-gun": _run_noon_gun,
    "ghz-scan": _run_ghz_scan,
    "ramsey": _run_ramsey,
    "feasibility": _run_feasibility,
}


@dataclass
class ScenarioResult:
    exit_code: int
    document: dict | None = None
    columns: list = field(default_factory=list)
    rows: list = field(default_factory=list)
    error: str | None = None


def _table_path(out: str | Path) -> Path:
    return Path(out).with_suffix(".csv")


def run_scenario(cfg: ScenarioConfig, out: str | None = None) -> ScenarioResult:
    """Run a validated scenario in memory; nothing is written here."""
    from .fredkin import InfeasiblePostselection

    out = out if out is not None else cfg.output
    try:
        outcomes, summary, columns, rows = RUNNERS[cfg.scheme](cfg)
    except InfeasiblePostselection as exc:
        return ScenarioResult(EXIT_INFEASIBLE, error=f"infeasible postselection: {exc}")
    except NumericalError as exc:
        return ScenarioResult(EXIT_NUMERICAL, error=f"numerical failure: {exc}")
    except (ConfigurationError, ResourceError) as exc:
        return ScenarioResult(EXIT_CONFIG, error=f"configuration error: {exc}")
    table = None
    if columns:
        table = {"file": _table_path(out).name if out else None, "columns": list(columns), "rows": len(rows)}
    doc = {
        "schema_version": SCHEMA_VERSION,
        "artifact": {"name": "artifact", "version": __version__},
        "scheme": cfg.scheme,
        "config": cfg.echo(),
        "outcomes": outcomes,
        "summary": summary,
        "table": table,
    }
    doc = json.loads(report.dumps(doc))  # normalize exactly as serialized
    jsonschema.validate(doc, _RESULT_SCHEMA)
    return ScenarioResult(EXIT_OK, doc, list(columns), rows)


def write_outputs(result: ScenarioResult, scheme: str, out: str | None,
                  figures: str | None = None) -> list[Path]:
    """Write the result document, its CSV table and optional figures."""
    text = report.dumps(result.document)
    written = []
    if out is None:
        sys.stdout.write(text)
    else:
        if result.columns:
            report.write_atomic(_table_path(out), report.csv_text(result.columns, result.rows))
            written.append(_table_path(out))
        report.write_atomic(out, text)
        written.append(Path(out))
    if figures is not None and result.columns:
        stem = Path(out).stem if out else scheme
        written += report.render_figures(scheme, result.columns, result.rows,
                                         result.document["summary"], figures, stem)
    return written


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="noonsim", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="scheme", required=True, metavar="SCHEME")
    for name in SCHEMES:
        sp = sub.add_parser(name, help=f"run the {name} scenario")
        sp.add_argument("--config", required=True, help="JSON scenario configuration")
        sp.add_argument("--out", help="result JSON path (CSV table written alongside); default stdout")
        sp.add_argument("--seed", type=int, help="override the config seed")
        sp.add_argument("--mode", choices=("exact", "sampled"), help="override the config mode")
        sp.add_argument("--figures", metavar="DIR", help="also render PNG figures into DIR (needs matplotlib)")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        text = Path(args.config).read_text(encoding="utf-8")
    except OSError as exc:
        print(f"error: cannot read config: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    overrides = {k: v for k, v in (("seed", args.seed), ("mode", args.mode)) if v is not None}
    try:
        cfg = parse_config(text, args.scheme, overrides)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    out = args.out if args.out is not None else cfg.output
    result = run_scenario(cfg, out)
    if result.exit_code != EXIT_OK:
        print(f"error: {result.error}", file=sys.stderr)
        return result.exit_code
    write_outputs(result, cfg.scheme, out, args.figures)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
