import sys

import pandas as pd

from dtameta.entity.artifact_entity import AsymptoticStudyArtifact
from dtameta.entity.config_entity import AsymptoticsConfig
from dtameta.exception import DTAMetaException
from dtameta.logger import logging
from dtameta.ml.asymptotics import limit_table_row
from dtameta.ml.quadrature import gauss_legendre
from dtameta.utils.main_utils import write_csv_atomic

LIMIT_REPORT_COLUMNS = ["rho_true", "n", "rho_khs", "pi_true", "pi_khs", "gamma_true", "gamma_khs",
                        "rho_mle", "pi_mle", "gamma_mle"]


class AsymptoticStudy:

    def __init__(self, asymptotics_config: AsymptoticsConfig):
        self.asymptotics_config = asymptotics_config

    def initiate_asymptotic_study(self) -> AsymptoticStudyArtifact:
        try:
            logging.info("Entered initiate_asymptotic_study")
            config = self.asymptotics_config
            rule = gauss_legendre(config.nq)
            rows = []
            for case in config.cases:
                logging.info(f"limiting estimates for {case}")
                rows.append(limit_table_row(case, rule, allow_large=config.allow_large))
            write_csv_atomic(config.report_file_path, pd.DataFrame(rows, columns=LIMIT_REPORT_COLUMNS))
            return AsymptoticStudyArtifact(report_file_path=config.report_file_path, rows=rows)
        except DTAMetaException:
            raise
        except Exception as e:
            raise DTAMetaException(e, sys) from e
