import logging
from pathlib import Path
from typing import Optional, Tuple

import numpy as np
from threadpoolctl import threadpool_limits

from config import JOBLIB_N_JOBS, NUM_THREADS, REPORTS_DIR
from crossed_products.systems.twisted_system import ConditionViolation
from experiments.experiment_config import ExperimentConfig
from experiments.experiment_suite import EXPERIMENT_RUNNERS, ExperimentContext
from experiments.report_utils import timestamp, write_report, write_tables
from experiments.system_builder import build_length, build_system

logger = logging.getLogger(__name__)

EXIT_PASSED = 0
EXIT_CONFIG_ERROR = 1
EXIT_VIOLATION = 2


def _context(config: ExperimentConfig, seed: int) -> ExperimentContext:
    rng = np.random.default_rng(seed)
    if config.system is None:
        return ExperimentContext(system=None, length=None, parameters=config.parameters, rng=rng, n_jobs=JOBLIB_N_JOBS)
    system = build_system(config.system)
    return ExperimentContext(
        system=system,
        length=build_length(system, config.system),
        parameters=config.parameters,
        rng=rng,
        n_jobs=JOBLIB_N_JOBS,
    )


def run_experiment(
    config: ExperimentConfig,
    seed: Optional[int] = None,
    output_dir: Optional[Path] = None,
    source: Optional[Path] = None,
) -> Tuple[int, Optional[Path]]:
    """
    Run one experiment and write its JSON report (plus CSV tables).

    Returns:
        (exit status, report path): 0 when every embedded check passed, 2 on an invariant
        violation, 1 when the configuration could not be turned into a system or run.
    """
    seed = config.seed if seed is None else seed
    directory = Path(output_dir or config.output.dir or REPORTS_DIR)
    stem = config.stem(source)
    try:
        ctx = _context(config, seed)
    except ValueError as e:
        logger.error(f"Could not assemble the system for {config.experiment}: {e}")
        return EXIT_CONFIG_ERROR, None

    runner = EXPERIMENT_RUNNERS[config.experiment]
    try:
        with threadpool_limits(limits=NUM_THREADS):
            outcome = runner(ctx)
    except ConditionViolation as e:
        logger.error(f"Experiment {config.experiment} hit a violated condition: {e}")
        return EXIT_VIOLATION, None
    except ValueError as e:
        logger.error(f"Experiment {config.experiment} rejected its parameters: {e}")
        return EXIT_CONFIG_ERROR, None
    except Exception:
        logger.exception(f"Experiment {config.experiment} failed unexpectedly")
        return EXIT_CONFIG_ERROR, None

    system = ctx.system.describe() if ctx.system is not None else {"name": config.experiment}
    payload = {
        "experiment": config.experiment,
        "seed": seed,
        "system": system,
        "parameters": config.parameters,
        "passed": outcome.passed,
        "results": outcome.results,
        "generated_at": timestamp(),
    }
    path = write_report(payload, directory, stem)
    if config.output.csv:
        write_tables(outcome.tables, directory, stem)
    if outcome.passed:
        logger.info(f"Experiment {config.experiment} passed")
        return EXIT_PASSED, path
    logger.error(f"Experiment {config.experiment} reported an invariant violation; see {path}")
    return EXIT_VIOLATION, path
