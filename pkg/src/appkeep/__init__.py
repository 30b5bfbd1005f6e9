"""appkeep: predict whether a mobile app will be removed from its store.

The pipeline goes CSV records -> engineered feature vectors -> a bagged
ensemble of shallow gradient-boosted trees -> ROC/AUC evaluation and a
prediction service with what-if support.
"""

__version__ = "0.1.0"

from .ingest import Label, RawAppRecord, aggregate_status, filter_complete, parse_records
from .manifest import ManifestInfo, group_actions, group_permissions, parse_manifest_xml

__all__ = [
    "Label",
    "RawAppRecord",
    "ManifestInfo",
    "aggregate_status",
    "filter_complete",
    "parse_records",
    "parse_manifest_xml",
    "group_permissions",
    "group_actions",
    "__version__",
]
