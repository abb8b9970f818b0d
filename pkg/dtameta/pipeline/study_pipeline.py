import sys
from typing import Optional

from dtameta.components.asymptotic_study import AsymptoticStudy
from dtameta.components.simulation_study import SimulationStudy
from dtameta.entity.artifact_entity import AsymptoticStudyArtifact, SimulationStudyArtifact
from dtameta.entity.config_entity import AsymptoticsConfig, MetaPipelineConfig, SimConfig, SimulationStudyConfig
from dtameta.exception import DTAMetaException
from dtameta.logger import logging


class StudyPipeline:
    """Monte-Carlo and limiting-estimator studies; no input data."""

    def __init__(self, out_dir: Optional[str] = None):
        self.meta_pipeline_config = MetaPipelineConfig(out_dir=out_dir)

    def start_simulation_study(self, sim_config: SimConfig, jobs: int = 1) -> SimulationStudyArtifact:
        try:
            simulation_study_config = SimulationStudyConfig(self.meta_pipeline_config, sim_config, jobs)
            logging.info("Starting simulation study")
            return SimulationStudy(simulation_study_config).initiate_simulation_study()
        except DTAMetaException:
            raise
        except Exception as e:
            raise DTAMetaException(e, sys) from e

    def start_asymptotic_study(self, cases: list, nq: Optional[int] = None,
                               allow_large: bool = False) -> AsymptoticStudyArtifact:
        try:
            asymptotics_config = AsymptoticsConfig(self.meta_pipeline_config, cases, allow_large=allow_large)
            if nq is not None:
                asymptotics_config.nq = nq
            logging.info("Starting asymptotic study")
            return AsymptoticStudy(asymptotics_config).initiate_asymptotic_study()
        except DTAMetaException:
            raise
        except Exception as e:
            raise DTAMetaException(e, sys) from e
