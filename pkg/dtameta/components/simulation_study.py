import sys

from dtameta.entity.artifact_entity import SimReport, SimulationStudyArtifact
from dtameta.entity.config_entity import SimulationStudyConfig
from dtameta.exception import DTAMetaException
from dtameta.logger import logging
from dtameta.ml.simulation import run_sim_study
from dtameta.utils.main_utils import write_csv_atomic, write_json_atomic


def sim_report_summary(report: SimReport, sim_config) -> dict:
    """JSON mirror of a simulation report: the table rows plus run bookkeeping."""
    return {
        "true_model": sim_config.true_model.label,
        "n_studies": report.n_studies,
        "replications": report.replications,
        "seed": sim_config.seed,
        "converged": report.converged,
        "excluded": report.excluded,
        "flagged": report.flagged,
        "redraws": report.redraws,
        "rows": report.table.to_dict(orient="records"),
    }


class SimulationStudy:

    def __init__(self, simulation_study_config: SimulationStudyConfig):
        self.simulation_study_config = simulation_study_config

    def initiate_simulation_study(self) -> SimulationStudyArtifact:
        try:
            logging.info("Entered initiate_simulation_study")
            config = self.simulation_study_config
            report = run_sim_study(config.sim_config, jobs=config.jobs)
            write_csv_atomic(config.report_file_path, report.table)
            write_json_atomic(config.report_json_path, sim_report_summary(report, config.sim_config))
            simulation_study_artifact = SimulationStudyArtifact(
                report_file_path=config.report_file_path,
                report_json_path=config.report_json_path,
                report=report,
            )
            logging.info(f"Simulation study artifact: {config.report_file_path}, "
                         f"{report.redraws} empty-arm redraws, flagged {report.flagged}")
            return simulation_study_artifact
        except DTAMetaException:
            raise
        except Exception as e:
            raise DTAMetaException(e, sys) from e
