"""Main entry point for the fqe-inference command line."""

import argparse
import logging
import sys
from collections.abc import Callable, Sequence

from pydantic import ValidationError

from . import __version__
from .commands import STUDIES, bootstrap_ci, bounds, fqe, gen_data, grad_check_command, run_study, variance
from .config import settings
from .errors import ConfigurationError, FqeInferenceError
from .models.requests import RunConfig, WeightScheme
from .models.responses import CommandOutput
from .utils.records import require_file

# Configure logging
logging.basicConfig(
    level=getattr(logging, settings.log_level.upper()),
    format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
    stream=sys.stderr,
)

logger = logging.getLogger(__name__)

COMMANDS: dict[str, Callable[[RunConfig], CommandOutput]] = {
    "gen-data": gen_data,
    "fqe": fqe,
    "variance": variance,
    "bounds": bounds,
    "bootstrap-ci": bootstrap_ci,
    "grad-check": grad_check_command,
    **{name: run_study for name in STUDIES},
}

PATH_FIELDS = (
    "mdp_path",
    "behavior_path",
    "target_path",
    "features_path",
    "dataset_path",
    "estimate_path",
    "study_config_path",
)

SCHEME_NAMES = ("vanilla", "multiplier-exponential", "multiplier-gamma", "multiplier-uniform")


def _inputs(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--mdp", dest="mdp_path", help="MDP JSON file")
    parser.add_argument("--target", dest="target_path", help="Target policy JSON file")
    parser.add_argument("--dataset", dest="dataset_path", help="Dataset file")
    parser.add_argument("--features", dest="features_path", help="Feature map JSON file (one-hot when omitted)")
    parser.add_argument("--estimate", dest="estimate_path", help="Reuse a saved FqeEstimate instead of refitting")


def _estimator(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--family", choices=["tabular", "linear", "smooth_net"], help="Approximator family")
    parser.add_argument("--hidden-width", type=int, help="smooth_net hidden width")
    parser.add_argument("--lambda", dest="lambda_", type=float, help="Regularization weight λ")
    parser.add_argument("--regularizer", choices=["none", "half_squared_norm"], help="Regularizer ρ(θ)")
    parser.add_argument(
        "--solver", choices=["auto", "normal_equations", "gauss_newton", "gradient_descent"], help="Stage solver"
    )
    parser.add_argument("--max-iters", type=int, help="Iteration cap of the iterative solvers")
    parser.add_argument("--grad-tol", type=float, help="Gradient-norm stopping tolerance")
    parser.add_argument("--init", choices=["zeros", "warm_start"], help="Stage start point")


def _inference(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--nu-mode", choices=["exact_mdp", "rollout"], help="How ν_h is computed")
    parser.add_argument("--rollout-episodes", type=int, help="Target-policy episodes for rollout ν_h")
    parser.add_argument("--jitter", action="store_true", default=None, help="Allow ridge jitter on singular Σ̂_h")
    parser.add_argument("--delta", dest="deltas", type=float, nargs="+", help="Levels δ in (0, 1)")


def _schemes(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--bootstrap-reps", type=int, help="Bootstrap replicates B")
    parser.add_argument("--scheme", nargs="+", choices=SCHEME_NAMES, help="Weighting schemes")
    parser.add_argument("--rate", type=float, default=1.0, help="Exponential multiplier rate")
    parser.add_argument("--shape", type=float, default=1.0, help="Gamma multiplier shape")
    parser.add_argument("--scale", type=float, default=1.0, help="Gamma multiplier scale")
    parser.add_argument("--low", type=float, default=0.5, help="Uniform multiplier lower end")
    parser.add_argument("--high", type=float, default=1.5, help="Uniform multiplier upper end")


def _seed(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--seed", type=int, help="Seed (required by stochastic subcommands)")


def build_parser() -> argparse.ArgumentParser:
    """Argument parser with one sub-parser per subcommand."""
    parser = argparse.ArgumentParser(
        prog="fqe-inference",
        description="Fitted Q-Evaluation with bootstrap and plug-in variance inference on finite-horizon MDPs.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="subcommand", required=True, metavar="SUBCOMMAND")

    p = sub.add_parser("gen-data", help="Generate a behavior-policy dataset")
    p.add_argument("--instance", choices=["two_state", "four_state"], help="Write a canonical instance too")
    p.add_argument("--mdp", dest="mdp_path", help="MDP JSON file")
    p.add_argument("--behavior", dest="behavior_path", help="Behavior policy JSON file")
    p.add_argument("--episodes", type=int, required=True, help="Episodes K")
    p.add_argument("--output", help="Output directory")
    _seed(p)

    p = sub.add_parser("fqe", help="Fit FQE and print v̂_π")
    _inputs(p)
    _estimator(p)
    p.add_argument("--output", help="FqeEstimate JSON file to write")

    for name, summary in (("variance", "Plug-in σ̂² and restricted χ²"), ("bounds", "Finite-sample bound terms")):
        p = sub.add_parser(name, help=summary)
        _inputs(p)
        _estimator(p)
        _inference(p)
        p.add_argument("--behavior", dest="behavior_path", help="Behavior policy, for the tabular χ²(μ̃, μ̄)")
        p.add_argument("--n-pairs", type=int, help="Pairs sampled by the positivity check")
        p.add_argument("--output", help="Table file (printed when omitted)")
        _seed(p)

    p = sub.add_parser("bootstrap-ci", help="Bootstrap confidence intervals")
    _inputs(p)
    _estimator(p)
    _schemes(p)
    p.add_argument("--delta", dest="deltas", type=float, nargs="+", help="Levels δ in (0, 1)")
    p.add_argument("--output", help="Table file (printed when omitted)")
    p.add_argument("--values-out", help="File for the replicate errors")
    _seed(p)

    p = sub.add_parser("grad-check", help="Finite-difference gradient check")
    p.add_argument("--family", choices=["tabular", "linear", "smooth_net"], help="Approximator family")
    p.add_argument("--feature-dim", type=int, help="Feature dimension m")
    p.add_argument("--hidden-width", type=int, help="smooth_net hidden width")
    p.add_argument("--trials", type=int, help="Random trial points")
    _seed(p)

    for name in STUDIES:
        p = sub.add_parser(name, help=f"Monte-Carlo {STUDIES[name][0].replace('_', '-')} study")
        p.add_argument("--config", dest="study_config_path", help="StudyConfig JSON file")
        p.add_argument("--instance", choices=["two_state", "four_state"], help="Canonical instance")
        p.add_argument("--family", choices=["tabular", "linear"], help="Approximator family")
        p.add_argument("--lambda", dest="lambda_", type=float, help="Regularization weight λ")
        p.add_argument("--episodes", dest="k_grid", type=int, nargs="+", help="Episode counts K")
        p.add_argument("--replications", type=int, help="Datasets M per K")
        p.add_argument("--sigma-mode", choices=["oracle", "plugin"], help="Standardization of the errors")
        p.add_argument("--nu-mode", choices=["exact_mdp", "rollout"], help="How ν_h is computed")
        p.add_argument("--delta", dest="deltas", type=float, nargs="+", help="Levels δ in (0, 1)")
        _schemes(p)
        p.add_argument("--output", help="Table file; the JSON sidecar goes next to it")
        _seed(p)

    return parser


def _scheme(name: str, args: argparse.Namespace) -> WeightScheme:
    if name == "vanilla":
        return WeightScheme()
    distribution = name.removeprefix("multiplier-")
    return WeightScheme(
        kind="multiplier",
        distribution=distribution,
        rate=args.rate,
        shape=args.shape,
        scale=args.scale,
        low=args.low,
        high=args.high,
    )


def run_config(args: argparse.Namespace) -> RunConfig:
    """Build the RunConfig from parsed arguments and check that named files exist."""
    options = {
        key: value
        for key, value in vars(args).items()
        if value is not None and key in RunConfig.model_fields and key != "schemes"
    }
    if getattr(args, "scheme", None):
        options["schemes"] = [_scheme(name, args) for name in args.scheme]
    config = RunConfig.model_validate(options)
    for field in PATH_FIELDS:
        path = getattr(config, field)
        if path is not None:
            require_file(path)
    return config


def _print(output: CommandOutput) -> None:
    print(" ".join(f"{key}={value}" for key, value in output.summary.items()))
    if output.table:
        print(output.table, end="")
    for path in output.files:
        logger.info(f"Wrote {path}")


def parse_and_dispatch(argv: Sequence[str] | None = None) -> int:
    """Run one subcommand and return the process exit status."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)

    try:
        config = run_config(args)
        output = COMMANDS[config.subcommand](config)
    except ValidationError as e:
        print(f"fqe-inference {args.subcommand}: invalid options: {e}", file=sys.stderr)
        return ConfigurationError.exit_code
    except FqeInferenceError as e:
        print(f"fqe-inference {args.subcommand}: {type(e).__name__}: {e}", file=sys.stderr)
        return e.exit_code
    except KeyboardInterrupt:
        logger.info("Interrupted by user")
        return 130
    except OSError as e:
        print(f"fqe-inference {args.subcommand}: {e}", file=sys.stderr)
        return 1

    _print(output)
    return 0


def main() -> None:
    """Main entry point for the command line."""
    sys.exit(parse_and_dispatch())


if __name__ == "__main__":
    main()
