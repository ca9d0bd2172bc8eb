"""
Repair of missing 3D points from two calibrated 2D observations.

Input rows:  point_id,cam_a,u_a,v_a,cam_b,u_b,v_b
Output rows: point_id,x,y,z,residual_px,error
Camera ids index the cameras in the order of the camera file. A row that
cannot be solved (unknown camera, parallel rays, malformed numbers) is
reported in the `error` column and the remaining rows are still processed.
"""

import logging
from pathlib import Path
from typing import List, Union

import numpy as np
import pandas as pd

from ..geometry import Camera, backproject, project, triangulate_two_rays
from ..utils.common import AppError, DataError, ParseError

logger = logging.getLogger(__name__)

OBSERVATION_COLUMNS = ["point_id", "cam_a", "u_a", "v_a", "cam_b", "u_b", "v_b"]
POINT_COLUMNS = ["point_id", "x", "y", "z", "residual_px", "error"]


class TriangulationService:

    def read_observations(self, path: Union[str, Path]) -> pd.DataFrame:
        path = Path(path)
        if not path.is_file():
            raise DataError(f"observation file {path} does not exist")
        try:
            table = pd.read_csv(path, dtype=str, keep_default_na=False, index_col=False)
        except pd.errors.EmptyDataError:
            return pd.DataFrame(columns=OBSERVATION_COLUMNS)
        except pd.errors.ParserError as e:
            raise ParseError(f"{path}: {e}") from None
        if list(table.columns) != OBSERVATION_COLUMNS:
            raise ParseError(f"{path}: expected header {','.join(OBSERVATION_COLUMNS)}", line=1)
        return table

    def solve_row(self, cameras: List[Camera], row) -> tuple:
        try:
            cam_a, cam_b = int(row.cam_a), int(row.cam_b)
            pixel_a = np.array([float(row.u_a), float(row.v_a)])
            pixel_b = np.array([float(row.u_b), float(row.v_b)])
        except ValueError as e:
            raise ParseError(f"malformed observation: {e}") from None
        for cam in (cam_a, cam_b):
            if not 0 <= cam < len(cameras):
                raise DataError(f"unknown camera id {cam}")
        point = triangulate_two_rays(backproject(cameras[cam_a], pixel_a), backproject(cameras[cam_b], pixel_b))
        residual = max(np.linalg.norm(project(cameras[cam_a], point) - pixel_a),
                       np.linalg.norm(project(cameras[cam_b], point) - pixel_b))
        return point, float(residual)

    def repair(self, cameras: List[Camera], observations: pd.DataFrame) -> pd.DataFrame:
        rows = []
        failures = 0
        for row in observations.itertuples(index=False):
            try:
                point, residual = self.solve_row(cameras, row)
                rows.append((row.point_id, *point.tolist(), residual, ""))
            except AppError as e:
                failures += 1
                logger.warning(f"Point {row.point_id}: {e.message}")
                rows.append((row.point_id, np.nan, np.nan, np.nan, np.nan, e.message))
        logger.info(f"Triangulated {len(rows) - failures} of {len(rows)} points")
        return pd.DataFrame(rows, columns=POINT_COLUMNS)


triangulation_service = TriangulationService()
