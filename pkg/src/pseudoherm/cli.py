"""Batch command line: ``pseudoherm <command> CONFIG.toml [--seed N] [--tol X] [--out PATH]``.

Each command reads one TOML document.  Matrices are given either as a path to a
matrix JSON file (relative to the config file) or inline as a table
``{rows, cols, data}``.  A metric is a matrix, or a table
``{hamiltonian = <matrix>, lambda = [...]}``; when omitted it is the identity.

Exit codes: 0 success, 2 invalid input, 3 numerical failure, 4 undetermined.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .dynamics import LindbladModel, TrajectoryConfig, run_trajectories
from .errors import NumericalError, ValidationError
from .gns import close_algebra, full_matrix_algebra, gns_construct, StateFunctional
from .io import (
    atomic_write,
    config_hash,
    dumps,
    load_matrix,
    matrix_from_json,
    matrix_to_json,
    vector_from_json,
    vector_to_json,
)
from .linalg import hermitian_part
from .metric import Metric, MetricState, intertwiner_from_unitary, metric_from_hamiltonian, pseudo_hermiticity_residual
from .partition import Verdict, entanglement_entropy, hamiltonian_compatible_class, same_bipartition
from .tomography import (
    pauli_frame,
    pauli_settings,
    read_dataset,
    reconstruct,
    reconstruct_from_records,
    simulate_dataset,
    trace_distance,
    verify_no_signalling,
    write_dataset,
)

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

EXIT_OK, EXIT_VALIDATION, EXIT_NUMERICAL, EXIT_UNDETERMINED = 0, 2, 3, 4


class Context:
    """Parsed config plus command-line overrides."""

    def __init__(self, config: dict, base: Path, args: argparse.Namespace):
        self.config = dict(config)
        self.base = base
        if args.seed is not None:
            self.config["seed"] = args.seed
        if args.tol is not None:
            self.config["tol"] = args.tol
        if args.out is not None:
            self.config["out"] = args.out
        # the destination does not change the result, so it stays out of the hash
        inputs = {k: v for k, v in self.config.items() if k not in ("out", "metric_out")}
        self.hash = config_hash({"command": args.command, **inputs})

    def get(self, key, default=None):
        return self.config.get(key, default)

    def require(self, key):
        if key not in self.config:
            raise ValidationError(f"config is missing required key {key!r}")
        return self.config[key]

    def seed(self) -> int:
        if "seed" not in self.config:
            raise ValidationError("a seed is required (config key 'seed' or --seed)")
        try:
            return int(self.config["seed"])
        except (TypeError, ValueError) as exc:
            raise ValidationError("seed must be an integer") from exc

    def tol(self, default: float) -> float:
        t = float(self.config.get("tol", default))
        if not (np.isfinite(t) and t > 0):
            raise ValidationError("tol must be positive")
        return t

    def path(self, p) -> Path:
        p = Path(p)
        return p if p.is_absolute() else self.base / p

    def matrix(self, spec, what: str) -> np.ndarray:
        if isinstance(spec, str):
            return load_matrix(self.path(spec))
        if isinstance(spec, dict):
            return matrix_from_json(spec, what)
        raise ValidationError(f"{what}: expected a file path or an inline matrix table")

    def metric(self, spec, what: str = "metric") -> Metric | None:
        if spec is None:
            return None
        if isinstance(spec, dict) and "hamiltonian" in spec:
            H = self.matrix(spec["hamiltonian"], f"{what}.hamiltonian")
            lam = spec.get("lambda")
            return metric_from_hamiltonian(H, lam)
        return Metric(self.matrix(spec, what))

    def dims(self) -> tuple[int, int]:
        d = self.require("dims")
        if not isinstance(d, list) or len(d) != 2 or not all(isinstance(x, int) and x > 0 for x in d):
            raise ValidationError("dims must be a list of two positive integers")
        return d[0], d[1]

    def out_path(self) -> Path | None:
        o = self.config.get("out")
        return None if o is None else self.path(o)

    def report(self, command: str, body: dict) -> str:
        return dumps({"command": command, "config_sha256": self.hash, "version": __version__, **body})


def _identity_if_none(m: Metric | None, d: int) -> Metric:
    return Metric.identity(d) if m is None else m


def _state(ctx: Context, metric: Metric, key_rho: str = "rho", key_psi: str = "psi") -> MetricState:
    """Euclidean density ``rho`` (or vector ``psi``) wrapped on ``H_G`` by similarity."""
    if key_rho in ctx.config:
        rho = ctx.matrix(ctx.config[key_rho], key_rho)
        if rho.shape != (metric.dim,) * 2:
            raise ValidationError(f"{key_rho} does not match the metric dimension")
        return MetricState.from_euclidean(rho, metric)
    if key_psi in ctx.config:
        psi = vector_from_json(ctx.config[key_psi], key_psi)
        if psi.shape[0] != metric.dim:
            raise ValidationError(f"{key_psi} does not match the metric dimension")
        psi = psi / np.linalg.norm(psi)
        return MetricState.from_euclidean(np.outer(psi, psi.conj()), metric)
    raise ValidationError(f"config needs {key_rho!r} or {key_psi!r}")


# -- commands -------------------------------------------------------------


def cmd_metric(ctx: Context) -> tuple[int, str, dict[Path, str]]:
    H = ctx.matrix(ctx.require("hamiltonian"), "hamiltonian")
    lam = ctx.get("lambda")
    tol = ctx.tol(1e-10)
    m = metric_from_hamiltonian(H, lam, tol=tol)
    res = pseudo_hermiticity_residual(H, m)
    body = {
        "G": matrix_to_json(m.G),
        "residual": res,
        "min_eigenvalue": float(np.linalg.eigvalsh(m.G)[0]),
        "condition_number": float(np.linalg.cond(m.G)),
    }
    files = {}
    if "metric_out" in ctx.config:
        files[ctx.path(ctx.config["metric_out"])] = dumps(matrix_to_json(m.G))
    text = ctx.report("metric", body)
    return EXIT_OK, f"residual {res:.3e}", {**files, **_out(ctx, text)}


def cmd_partition(ctx: Context):
    dims = ctx.dims()
    mode = ctx.get("mode", "same_bipartition")
    tol = ctx.tol(1e-8)
    d = dims[0] * dims[1]
    G = _identity_if_none(ctx.metric(ctx.get("G"), "G"), d)
    Gp = _identity_if_none(ctx.metric(ctx.get("G_prime"), "G_prime"), d)
    if G.dim != d or Gp.dim != d:
        raise ValidationError("metric dimension does not match dims")
    if mode == "same_bipartition":
        if "T" in ctx.config:
            T = ctx.matrix(ctx.config["T"], "T")
        elif "U" in ctx.config:
            T = intertwiner_from_unitary(ctx.matrix(ctx.config["U"], "U"), Gp, G).T
        elif np.allclose(G.G, Gp.G):
            T = np.eye(d)
        else:
            raise ValidationError("same_bipartition needs T or U when G != G_prime")
        rep = same_bipartition(G, Gp, T, dims, tol=tol)
    elif mode == "hamiltonian":
        H = ctx.matrix(ctx.require("hamiltonian"), "hamiltonian")
        budget = int(ctx.get("search_budget", 32))
        rep = hamiltonian_compatible_class(H, G, Gp, dims, tol=tol, search_budget=budget, seed=ctx.seed())
    else:
        raise ValidationError("mode must be 'same_bipartition' or 'hamiltonian'")
    body = {
        "verdict": rep.verdict.value,
        "schmidt_values": rep.schmidt_values,
        "residuals": rep.residuals,
        "search": rep.search,
        "V": rep.V,
        "T": rep.T,
    }
    if rep.witness is not None:
        body["witness"] = {"U1": matrix_to_json(rep.witness[0]), "U2": matrix_to_json(rep.witness[1])}
    if "rho" in ctx.config or "psi" in ctx.config:
        state = _state(ctx, G)
        body["entanglement_entropy"] = entanglement_entropy(state, dims)
    code = EXIT_UNDETERMINED if rep.verdict is Verdict.UNDETERMINED else EXIT_OK
    return code, f"verdict {rep.verdict.value}", _out(ctx, ctx.report("partition", body))


def _expectations_table(ctx: Context, labels) -> list[float]:
    table = ctx.require("expectations")
    if not isinstance(table, dict):
        raise ValidationError("expectations must be a table of Pauli label -> value")
    missing = [l for l in labels if l not in table]
    if missing:
        raise ValidationError(f"expectations missing for {missing}")
    return [float(table[l]) for l in labels]


def cmd_tomo(ctx: Context):
    mode = ctx.require("mode")
    n = int(ctx.require("n_qubits"))
    if n < 1:
        raise ValidationError("n_qubits must be positive")
    metric = _identity_if_none(ctx.metric(ctx.get("metric")), 2 ** n)
    if metric.dim != 2 ** n:
        raise ValidationError("metric dimension does not match n_qubits")
    if mode == "simulate":
        state = _state(ctx, metric)
        shots = int(ctx.require("shots"))
        records = simulate_dataset(state, pauli_settings(n), shots, ctx.seed())
        text = write_dataset(records)
        out = ctx.out_path() or (ctx.path(ctx.config["dataset"]) if "dataset" in ctx.config else None)
        return EXIT_OK, f"{len(records)} records", {out: text}
    if mode != "reconstruct":
        raise ValidationError("mode must be 'simulate' or 'reconstruct'")
    if "dataset" in ctx.config:
        p = ctx.path(ctx.config["dataset"])
        try:
            records = read_dataset(p.read_text())
        except FileNotFoundError as exc:
            raise ValidationError(f"file not found: {p}") from exc
        rec = reconstruct_from_records(records, n, metric)
    else:
        labels = ctx.get("frame_labels")
        frame = pauli_frame(n, metric, labels)
        rec = reconstruct(_expectations_table(ctx, frame.labels), frame)
    body = {
        "rho_bar": rec.state.rho_bar,
        "rho": rec.state.hermitized(),
        "raw": rec.raw,
        "condition_number": rec.condition_number,
        "psd_projected": rec.psd_projected,
        "min_eigenvalue": rec.min_eigenvalue,
    }
    if "reference" in ctx.config:
        ref = MetricState.from_euclidean(ctx.matrix(ctx.config["reference"], "reference"), metric)
        body["trace_distance"] = trace_distance(rec.state, ref)
    msg = f"trace distance {body['trace_distance']:.3g}" if "trace_distance" in body else "reconstructed"
    return EXIT_OK, msg, _out(ctx, ctx.report("tomo", body))


def cmd_nosignal(ctx: Context):
    dims = ctx.dims()
    d = dims[0] * dims[1]
    tol = ctx.tol(1e-10)
    metric = _identity_if_none(ctx.metric(ctx.get("metric")), d)
    state = _state(ctx, metric)
    if "povm" in ctx.config:
        povm = [ctx.matrix(M, "povm element") for M in ctx.config["povm"]]
    elif "bob_factors" in ctx.config:
        povm = [
            metric.eta_inv @ np.kron(np.eye(dims[0]), ctx.matrix(P, "bob factor")) @ metric.eta
            for P in ctx.config["bob_factors"]
        ]
    else:
        raise ValidationError("config needs 'povm' or 'bob_factors'")
    rep = verify_no_signalling(state, dims, povm, tol=tol)
    body = {
        "holds": rep.holds,
        "max_deviation": rep.max_deviation,
        "marginal_deviation": rep.marginal_deviation,
        "post_measurement_deviation": rep.post_measurement_deviation,
        "locality_residual": rep.locality_residual,
        "completeness_residual": rep.completeness_residual,
    }
    return EXIT_OK, f"holds {rep.holds} max_deviation {rep.max_deviation:.2e}", _out(ctx, ctx.report("nosignal", body))


def cmd_dynamics(ctx: Context):
    jumps = [ctx.matrix(L, "jump") for L in ctx.get("jumps", [])]
    if "effective" in ctx.config:
        model = LindbladModel.from_effective(ctx.matrix(ctx.config["effective"], "effective"), jumps)
    else:
        model = LindbladModel(ctx.matrix(ctx.require("hamiltonian"), "hamiltonian"), tuple(jumps))
    metric = ctx.metric(ctx.get("metric"))
    psi0 = vector_from_json(ctx.require("psi0"), "psi0")
    cfg = TrajectoryConfig(
        dt=float(ctx.require("dt")),
        steps=int(ctx.require("steps")),
        replicas=int(ctx.get("replicas", 1)),
        seed=ctx.seed(),
        metric=metric,
        checkpoint_every=int(ctx.get("checkpoint_every", 1)),
        propagator=str(ctx.get("propagator", "exact")),
    )
    res = run_trajectories(psi0, model, cfg)
    body = {
        "t": res.times,
        "G_norm": {"mean": res.norm_mean, "min": res.norm_min, "max": res.norm_max},
        "jump_counts": res.jump_counts,
        "p_jump_mean": res.p_jump_mean,
        "p_jump_trace_form_mean": res.p_jump_trace_form_mean,
        "densities": [matrix_to_json(r) for r in res.densities],
        "mode": "metric" if metric is not None else "euclidean",
    }
    drift = float(np.max(np.abs(res.norm_mean - 1.0)))
    return EXIT_OK, f"max |G_norm - 1| {drift:.3e}", _out(ctx, ctx.report("dynamics", body))


def cmd_gns(ctx: Context):
    rho = ctx.matrix(ctx.require("rho"), "rho")
    tol = ctx.tol(1e-10)
    d = rho.shape[0]
    if "generators" in ctx.config:
        alg = close_algebra([ctx.matrix(g, "generator") for g in ctx.config["generators"]], tol=tol)
    else:
        alg = full_matrix_algebra(d)
    if np.linalg.norm(rho - rho.conj().T, 2) > 1e-10:
        raise ValidationError("rho must be Hermitian")
    omega = StateFunctional.from_density(alg, hermitian_part(rho))
    rep = gns_construct(omega, tol=tol)
    body = {
        "algebra_dim": alg.size,
        "hilbert_dim": rep.hilbert_dim,
        "gram_spectrum": rep.gram_spectrum,
        "cyclic_vector": vector_to_json(rep.cyclic_vector),
        "residuals": rep.residuals(),
    }
    return EXIT_OK, f"hilbert_dim {rep.hilbert_dim}", _out(ctx, ctx.report("gns", body))


def _out(ctx: Context, text: str) -> dict:
    out = ctx.out_path()
    return {out: text} if out is not None else {None: text}


COMMANDS = {
    "metric": cmd_metric,
    "partition": cmd_partition,
    "tomo": cmd_tomo,
    "nosignal": cmd_nosignal,
    "dynamics": cmd_dynamics,
    "gns": cmd_gns,
}


HELP = {
    "metric": "metric operator from a Hamiltonian with real spectrum",
    "partition": "decide whether two metric spaces carry the same bipartition",
    "tomo": "simulate Stern-Gerlach data or reconstruct a state",
    "nosignal": "check that a local POVM leaves the other marginal unchanged",
    "dynamics": "quantum-jump trajectories in Euclidean or metric space",
    "gns": "GNS representation of a state on a matrix algebra",
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="pseudoherm", description="Pseudo-Hermitian quantum mechanics toolkit")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    for name, fn in COMMANDS.items():
        s = sub.add_parser(name, help=HELP[name])
        s.add_argument("config", type=Path, help="TOML config file")
        s.add_argument("--seed", type=int, default=None, help="override the config seed")
        s.add_argument("--tol", type=float, default=None, help="override the command tolerance")
        s.add_argument("--out", type=str, default=None, help="output file (default: stdout)")
    return p


def run(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        try:
            config = tomllib.loads(args.config.read_text())
        except FileNotFoundError as exc:
            raise ValidationError(f"config not found: {args.config}") from exc
        except tomllib.TOMLDecodeError as exc:
            raise ValidationError(f"invalid TOML: {exc}") from exc
        ctx = Context(config, args.config.resolve().parent, args)
        code, message, files = COMMANDS[args.command](ctx)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (NumericalError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (TypeError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    for path, text in files.items():
        if path is None:
            sys.stdout.write(text)
        else:
            atomic_write(path, text)
    print(message, file=sys.stdout if None not in files else sys.stderr)
    return code


def main(argv=None) -> None:
    sys.exit(run(argv))
