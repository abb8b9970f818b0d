import argparse
import sys

import pandas as pd
from dotenv import load_dotenv

from dtameta.constant.application import APP_NAME, EXIT_NUMERIC_ERROR, EXIT_SUCCESS
from dtameta.constant.meta_pipeline import (
    ASYMPTOTICS_NQ,
    ASYMPTOTICS_UNGATED_MAX_N,
    FLOAT_FORMAT,
    MODEL_FIT_BASELINE,
    QUADRATURE_DEFAULT_NQ,
    SIMULATION_FITTED_MODELS,
    SIMULATION_PREVALENCE,
    SIMULATION_REPLICATIONS,
    SIMULATION_TRUE_MODEL,
    SIMULATION_TRUE_PARAMETERS,
    SROC_LEVELS,
    SROC_QUANTILES,
)
from dtameta.entity.config_entity import AsymptoticsCase, FitOptions, SimConfig
from dtameta.exception import DTAMetaException, ValidationError
from dtameta.logger import logging
from dtameta.ml.simulation import true_model_from_parameters
from dtameta.pipeline.meta_analysis_pipeline import MetaAnalysisPipeline
from dtameta.pipeline.study_pipeline import StudyPipeline

# limiting-estimator configurations run when no --case is given: (rho, pi, gamma, n)
DEFAULT_LIMIT_CASES = ((-0.5, 0.7, 0.1, 20), (-0.8, 0.8, 0.2, 20), (-1.0, 0.9, 0.2, 20))


class _ArgumentParser(argparse.ArgumentParser):
    """Usage errors become validation errors so they share the exit-code contract."""

    def error(self, message):
        raise ValidationError(f"{self.prog}: {message}")


def _floats(text: str) -> tuple:
    try:
        return tuple(float(item) for item in text.split(",") if item.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _labels(text: str) -> tuple:
    return tuple(item.strip().lower() for item in text.split(",") if item.strip())


def _case(text: str) -> AsymptoticsCase:
    values = _floats(text)
    if len(values) != 4:
        raise argparse.ArgumentTypeError(f"a case is rho,pi,gamma,n; got {text!r}")
    rho, pi, gamma, n = values
    return AsymptoticsCase(rho=rho, pi=pi, gamma=gamma, n=int(n))


def build_parser() -> argparse.ArgumentParser:
    common = _ArgumentParser(add_help=False)
    common.add_argument("--nq", type=int, default=None,
                        help=f"Gauss-Legendre nodes per dimension (default {QUADRATURE_DEFAULT_NQ})")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--jobs", type=int, default=1, help="models or replications run at once")
    common.add_argument("--out-dir", default=None, help="output directory (default artifact/<timestamp>)")

    parser = _ArgumentParser(prog=APP_NAME, description="Copula mixed models for diagnostic test accuracy "
                                                        "meta-analysis")
    commands = parser.add_subparsers(dest="command", required=True)

    fit = commands.add_parser("fit", parents=[common], help="fit a model grid and compare it with the GLMM")
    fit.add_argument("input", help="study table with header study,TP,FN,FP,TN")
    fit.add_argument("--models", type=_labels, default=None,
                     help="comma-separated model identifiers, e.g. beta-clayton270,khs-clayton270,sarmanov")

    sroc = commands.add_parser("sroc", parents=[common], help="SROC curves, summary point and regions")
    sroc.add_argument("input", help="study table with header study,TP,FN,FP,TN")
    sroc.add_argument("--model", default=MODEL_FIT_BASELINE)
    sroc.add_argument("--quantiles", type=_floats, default=SROC_QUANTILES)
    sroc.add_argument("--levels", type=_floats, default=SROC_LEVELS)
    sroc.add_argument("--fit-file", default=None, help="saved fit from a previous fit run")

    simulate = commands.add_parser("simulate", parents=[common], help="small-sample efficiency study")
    simulate.add_argument("--n-studies", type=int, default=50)
    simulate.add_argument("--replications", type=int, default=SIMULATION_REPLICATIONS)
    simulate.add_argument("--true-model", default=SIMULATION_TRUE_MODEL)
    for name, value in SIMULATION_TRUE_PARAMETERS.items():
        simulate.add_argument(f"--{name}", type=float, default=value)
    simulate.add_argument("--prevalence", type=float, default=SIMULATION_PREVALENCE)
    simulate.add_argument("--models", type=_labels, default=SIMULATION_FITTED_MODELS)

    asymptotics = commands.add_parser("asymptotics", parents=[common],
                                      help="limiting KHS and ML estimates for a BVN copula mixed model")
    asymptotics.add_argument("--case", type=_case, action="append", default=None,
                             help="rho,pi,gamma,n (repeatable)")
    asymptotics.add_argument("--allow-large", action="store_true",
                             help=f"permit group sizes above {ASYMPTOTICS_UNGATED_MAX_N}")
    return parser


def _print_table(frame: pd.DataFrame, columns: list = None) -> None:
    frame = frame[columns] if columns else frame
    print(frame.to_string(index=False, float_format=lambda value: FLOAT_FORMAT % value))


def run_fit(args) -> None:
    options = FitOptions(nq=args.nq or QUADRATURE_DEFAULT_NQ)
    artifact = MetaAnalysisPipeline(args.input, args.out_dir, options).run_fit_pipeline(args.models, args.jobs)
    report = pd.read_csv(artifact.report_file_path)
    _print_table(report, ["model", "fit", "converged", "loglik", "pi1", "pi2", "scale1", "scale2", "tau",
                          "vuong_statistic", "vuong_p_value"])
    for label, error in artifact.failed.items():
        print(f"{label}: failed: {error}")
    print(f"report: {artifact.report_file_path}")


def run_sroc(args) -> None:
    options = FitOptions(nq=args.nq or QUADRATURE_DEFAULT_NQ)
    artifact = MetaAnalysisPipeline(args.input, args.out_dir, options).run_sroc_pipeline(
        args.model, args.quantiles, args.levels, args.fit_file)
    if artifact.curves is not None and artifact.curves.notice:
        print(artifact.curves.notice)
    for path in artifact.written_files:
        print(path)


def run_simulate(args) -> None:
    parameters = {name: getattr(args, name) for name in SIMULATION_TRUE_PARAMETERS}
    true_model = true_model_from_parameters(args.true_model, **parameters)
    sim_config = SimConfig(
        n_studies=args.n_studies, true_model=true_model, replications=args.replications,
        prevalence=args.prevalence, seed=args.seed, fitted_models=args.models,
        fit_options=FitOptions(nq=args.nq or QUADRATURE_DEFAULT_NQ),
    )
    artifact = StudyPipeline(args.out_dir).start_simulation_study(sim_config, args.jobs)
    _print_table(artifact.report.table)
    for label in artifact.report.flagged:
        print(f"{label}: excluded {artifact.report.excluded[label]} of {artifact.report.replications} "
              f"replications for non-convergence")
    print(f"report: {artifact.report_file_path}")


def run_asymptotics(args) -> None:
    cases = args.case or [AsymptoticsCase(*case) for case in DEFAULT_LIMIT_CASES]
    artifact = StudyPipeline(args.out_dir).start_asymptotic_study(cases, nq=args.nq or ASYMPTOTICS_NQ,
                                                                  allow_large=args.allow_large)
    _print_table(pd.DataFrame(artifact.rows))
    print(f"report: {artifact.report_file_path}")


COMMANDS = {"fit": run_fit, "sroc": run_sroc, "simulate": run_simulate, "asymptotics": run_asymptotics}


def main(argv=None) -> int:
    load_dotenv()
    try:
        args = build_parser().parse_args(argv)
        COMMANDS[args.command](args)
        return EXIT_SUCCESS
    except DTAMetaException as e:
        print(f"error: {e.args[0]}", file=sys.stderr)
        return e.exit_code
    except Exception as e:
        logging.exception(e)
        print(f"error: {e}", file=sys.stderr)
        return EXIT_NUMERIC_ERROR


if __name__ == "__main__":
    sys.exit(main())
