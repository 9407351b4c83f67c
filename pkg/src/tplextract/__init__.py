"""Static extraction of third-party-library coordinates from Android Gradle projects."""

__version__ = "0.1.0"

from .finalize import ExtractionReport, Options, extract_project  # noqa: E402
from .model import Coordinate, Status, parse_coordinate  # noqa: E402
from .versions import compare_versions  # noqa: E402

__all__ = ["Coordinate", "ExtractionReport", "Options", "Status", "compare_versions", "extract_project",
           "parse_coordinate", "__version__"]
