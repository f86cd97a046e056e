"""Command-line interface: verify the phase-matrix algebra, compile schedules,
run theta sweeps, and simulate schedule files.

Exit codes are stable for scripting: 0 success, 1 internal error, 2 usage
error, 3 infeasible or incompatible compilation.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import asdict, dataclass, fields, replace

from . import phase_matrix, simulator
from .hamiltonian import QuditHamiltonian, blbq_problem, zz_source
from .solver import CompatibilityError, CompileOptions, InfeasibleError, Schedule, compile_schedule, gate_count

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_USAGE = 2
EXIT_INFEASIBLE = 3


@dataclass(frozen=True)
class RunConfig:
    """Experiment parameters; defaults reproduce the reference noise setting."""

    d: int = 3
    n: int = 6
    T: float = 1.0
    theta: float | None = None
    theta_grid: tuple = (0.0, math.pi, 33)
    t1_over_T: float = 100.0
    delta_t_over_T: float = 0.01
    single_gate_fidelity: float = 0.994
    two_gate_fidelity: float = 0.95
    pruning_factor: float = 4.0
    word_policy: str = "auto"
    output: str | None = None
    schedules_dir: str | None = None
    seed: int = 0

    def to_dict(self) -> dict:
        data = asdict(self)
        data["theta_grid"] = list(self.theta_grid)
        return data

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        if "theta_grid" in data:
            data = {**data, "theta_grid": tuple(data["theta_grid"])}
        return cls(**data)

    @classmethod
    def from_file(cls, path) -> "RunConfig":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))

    def noise_model(self) -> simulator.NoiseModel:
        return simulator.NoiseModel(
            t1=self.t1_over_T * self.T,
            single_gate_duration=self.delta_t_over_T * self.T,
            single_gate_fidelity=self.single_gate_fidelity,
            two_gate_fidelity=self.two_gate_fidelity,
        )

    def compile_options(self, prune: bool = True) -> CompileOptions:
        return CompileOptions(
            word_policy=self.word_policy,
            delta_t=self.delta_t_over_T * self.T if prune else None,
            pruning_factor=self.pruning_factor,
        )

    def thetas(self) -> list:
        start, stop, points = self.theta_grid
        step = (stop - start) / (int(points) - 1) if int(points) > 1 else 0.0
        return [start + k * step for k in range(int(points))]


def _load_config(args) -> RunConfig:
    config = RunConfig.from_file(args.config) if getattr(args, "config", None) else RunConfig()
    overrides = {}
    for name in ("d", "n", "T", "theta", "word_policy", "output", "schedules_dir", "seed"):
        value = getattr(args, name, None)
        if value is not None:
            overrides[name] = value
    if getattr(args, "theta_grid", None) is not None:
        start, stop, points = args.theta_grid.split(":")
        overrides["theta_grid"] = (float(start), float(stop), int(points))
    return replace(config, **overrides)


def _parse_d_list(text: str, parser) -> list:
    try:
        values = [int(part) for part in text.split(",") if part.strip()]
    except ValueError:
        parser.error(f"malformed dimension list {text!r}; expected e.g. '2,3'")
    if not values or any(v < 2 for v in values):
        parser.error(f"dimension list {text!r} must contain integers >= 2")
    return values


def _load_hamiltonian(spec_text: str, config: RunConfig, role: str) -> QuditHamiltonian:
    if spec_text == "zz":
        return zz_source(config.n, config.d)
    if spec_text == "blbq":
        if config.d != 3:
            raise ValueError("the built-in biquadratic chain problem requires d = 3")
        theta = config.theta if config.theta is not None else 0.0
        return blbq_problem(config.n, theta)
    return QuditHamiltonian.load(spec_text)


def cmd_verify(args, parser) -> int:
    d_values = _parse_d_list(args.d, parser)
    properties = tuple(args.property) if args.property else None
    checks = []
    for d in d_values:
        checks.extend(phase_matrix.run_verifiers(d, properties=properties))
    report = [c.to_dict() for c in checks]
    if args.out:
        with open(args.out, "w") as fh:
            json.dump(report, fh, indent=2)
    failures = 0
    for c in checks:
        status = "pass" if c.passed else "FAIL"
        print(f"[{status}] d={c.d} {c.name} residual={c.residual:.3e}")
        failures += not c.passed
    print(f"{len(checks) - failures}/{len(checks)} checks passed")
    return EXIT_OK if failures == 0 else EXIT_ERROR


def cmd_compile(args, parser) -> int:
    config = _load_config(args)
    source = _load_hamiltonian(args.source, config, "source")
    problem = _load_hamiltonian(args.problem, config, "problem")
    options = config.compile_options(prune=not args.no_prune)
    schedule = compile_schedule(source, problem, config.T, options, theta=config.theta)
    out = config.output or "schedule.json"
    schedule.save(out)
    print(
        f"wrote {out}: residual={schedule.metadata['residual']:.3e} "
        f"blocks={len(schedule.blocks)} gates={gate_count(schedule)}"
    )
    return EXIT_OK


def cmd_sweep(args, parser) -> int:
    config = _load_config(args)
    rows = simulator.sweep(
        config.thetas(),
        config.n,
        config.T,
        config.noise_model(),
        config.compile_options(),
        workers=args.workers,
        schedules_dir=config.schedules_dir,
    )
    out = config.output or "sweep.csv"
    simulator.write_sweep_table(rows, out)
    print(f"wrote {out}: {len(rows)} rows")
    return EXIT_OK


def cmd_simulate(args, parser) -> int:
    config = _load_config(args)
    schedule = Schedule.load(args.schedule)
    config = replace(config, d=schedule.d, n=schedule.n, T=schedule.total_time)
    source = _load_hamiltonian(args.source, config, "source")
    noise = None if args.noiseless else config.noise_model()
    state = simulator.ghz_state(schedule.d, schedule.n, density=noise is not None)
    if args.mode == "bdaqc":
        final = simulator.run_bdaqc(schedule, source, noise or config.noise_model(), state.to_density())
    else:
        final = simulator.run_sdaqc(schedule, source, noise, state)
    metrics = {"mode": args.mode, "blocks": len(schedule.blocks), "gates": gate_count(schedule)}
    if args.problem:
        problem = _load_hamiltonian(args.problem, config, "problem")
        ideal = simulator.ideal_evolution(problem, schedule.total_time, simulator.ghz_state(schedule.d, schedule.n))
        metrics["fidelity"] = simulator.state_fidelity(ideal, final)
    if final.is_density:
        metrics["trace"] = float(np.trace(final.data).real) if (np := _numpy()) else None
        metrics["purity"] = float(np.trace(final.data @ final.data).real)
    print(json.dumps(metrics, indent=2))
    return EXIT_OK


def _numpy():
    import numpy

    return numpy


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qudaqc", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_verify = sub.add_parser("verify", help="run the phase-matrix verification suites")
    p_verify.add_argument("--d", required=True, help="comma-separated dimensions, e.g. 2,3")
    p_verify.add_argument("--property", action="append", help="filter by property name prefix")
    p_verify.add_argument("--out", help="write a JSON report")
    p_verify.set_defaults(func=cmd_verify)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON config file")
    common.add_argument("--d", type=int)
    common.add_argument("--n", type=int)
    common.add_argument("--T", type=float)
    common.add_argument("--theta", type=float)
    common.add_argument("--word-policy", dest="word_policy")
    common.add_argument("--output")
    common.add_argument("--seed", type=int)

    p_compile = sub.add_parser("compile", parents=[common], help="compile a schedule file")
    p_compile.add_argument("--source", default="zz", help="'zz' or a Hamiltonian JSON path")
    p_compile.add_argument("--problem", default="blbq", help="'blbq' or a Hamiltonian JSON path")
    p_compile.add_argument("--no-prune", action="store_true")
    p_compile.set_defaults(func=cmd_compile)

    p_sweep = sub.add_parser("sweep", parents=[common], help="theta sweep with noisy execution")
    p_sweep.add_argument("--theta-grid", dest="theta_grid", help="start:stop:points")
    p_sweep.add_argument("--schedules-dir", dest="schedules_dir")
    p_sweep.add_argument("--workers", type=int, default=None)
    p_sweep.set_defaults(func=cmd_sweep)

    p_sim = sub.add_parser("simulate", parents=[common], help="execute a schedule file")
    p_sim.add_argument("--schedule", required=True)
    p_sim.add_argument("--source", default="zz")
    p_sim.add_argument("--problem", help="reference Hamiltonian for fidelity")
    p_sim.add_argument("--mode", choices=("sdaqc", "bdaqc"), default="sdaqc")
    p_sim.add_argument("--noiseless", action="store_true")
    p_sim.set_defaults(func=cmd_simulate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args, parser)
    except (CompatibilityError, InfeasibleError) as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
