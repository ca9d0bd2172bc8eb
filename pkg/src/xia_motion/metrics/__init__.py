from .errors import (
    METRICS, ROLES, mpjpe, jme, sme, ame, joint_errors, role_errors, all_role_errors,
    horizon_frames, horizon_table,
)
from .report import (
    AVG, REPORT_COLUMNS, EvaluationRecord, MetricsReport, breakdown,
    read_report_csv, render_table, write_report_csv,
)
